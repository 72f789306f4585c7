//! Raster types and the low-level operators everything else is built on:
//! bilinear warping, Sobel gradients, Gaussian smoothing and resampling.
//!
//! All operators use clamp-to-edge borders.

mod io;

pub use io::{decode_field, decode_pgm, encode_field, encode_pgm, load_field, load_image, save_field, save_image};
pub(crate) use io::write_atomic;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_dims, Error, Result};

/// Single-channel floating point raster, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Malformed(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data"));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        Image {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel lookup with clamp-to-edge for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(Image {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Image> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidParameter(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        Ok(Image::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y)))
    }

    /// Center crop to the given size (offset rounds down).
    pub fn center_crop(&self, width: usize, height: usize) -> Result<Image> {
        if width > self.width || height > self.height {
            return Err(Error::InvalidParameter(format!(
                "center crop {width}x{height} larger than {}x{}",
                self.width, self.height
            )));
        }
        self.crop((self.width - width) / 2, (self.height - height) / 2, width, height)
    }

    /// Horizontal shift right by `shift` pixels with edge replication.
    pub fn shift_right(&self, shift: usize) -> Image {
        Image::from_fn(self.width, self.height, |x, y| {
            self.get_clamped(x as isize - shift as isize, y as isize)
        })
    }
}

/// Dense per-pixel displacement field using the backward-warp convention:
/// output pixel `p` samples its source at `p + (dx(p), dy(p))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    width: usize,
    height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl DisplacementField {
    pub fn zeros(width: usize, height: usize) -> Self {
        DisplacementField {
            width,
            height,
            dx: vec![0.0; width * height],
            dy: vec![0.0; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, dx: f64, dy: f64) -> Self {
        DisplacementField {
            width,
            height,
            dx: vec![dx; width * height],
            dy: vec![dy; width * height],
        }
    }

    pub fn new(width: usize, height: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if dx.len() != width * height || dy.len() != width * height {
            return Err(Error::Malformed(format!(
                "field planes of {}/{} samples for {width}x{height}",
                dx.len(),
                dy.len()
            )));
        }
        if dx.iter().chain(&dy).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("displacement field"));
        }
        Ok(DisplacementField {
            width,
            height,
            dx,
            dy,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Self {
        let mut field = DisplacementField::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                let (dx, dy) = f(x, y);
                field.dx[y * width + x] = dx;
                field.dy[y * width + x] = dy;
            }
        }
        field
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.dx[i], self.dy[i])
    }

    /// Bilinear sample of the field at a continuous position (clamped).
    pub fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        (
            sample_plane(&self.dx, self.width, self.height, x, y),
            sample_plane(&self.dy, self.width, self.height, x, y),
        )
    }

    pub fn scaled(&self, factor: f64) -> DisplacementField {
        DisplacementField {
            width: self.width,
            height: self.height,
            dx: self.dx.iter().map(|v| v * factor).collect(),
            dy: self.dy.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.dx
            .iter()
            .chain(&self.dy)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Sobel gradient magnitude and orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<f64>,
    /// `atan2(gy, gx)` in (-pi, pi].
    pub angle: Vec<f64>,
}

#[inline]
pub(crate) fn sample_plane(data: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let xc = x.clamp(0.0, (width - 1) as f64);
    let yc = y.clamp(0.0, (height - 1) as f64);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let fx = xc - x0 as f64;
    let fy = yc - y0 as f64;
    if fx == 0.0 && fy == 0.0 {
        return data[y0 * width + x0];
    }
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let top = data[y0 * width + x0] * (1.0 - fx) + data[y0 * width + x1] * fx;
    let bottom = data[y1 * width + x0] * (1.0 - fx) + data[y1 * width + x1] * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Warped value at output pixel `(x, y)` for displacement `(dx, dy)`.
#[inline]
pub(crate) fn warp_at(img: &Image, x: usize, y: usize, dx: f64, dy: f64) -> f64 {
    sample_plane(&img.data, img.width, img.height, x as f64 + dx, y as f64 + dy)
}

pub fn warp(img: &Image, field: &DisplacementField) -> Result<Image> {
    ensure_same_dims(img.dims(), field.dims())?;
    let w = img.width;
    let mut out = Vec::with_capacity(img.len());
    for y in 0..img.height {
        for x in 0..w {
            let i = y * w + x;
            out.push(warp_at(img, x, y, field.dx[i], field.dy[i]));
        }
    }
    Ok(Image {
        width: w,
        height: img.height,
        data: out,
    })
}

/// Sobel responses `(gx, gy)` at a pixel, replicate padded. `y` grows downward.
#[inline]
pub(crate) fn sobel_at(data: &[f64], width: usize, height: usize, x: usize, y: usize) -> (f64, f64) {
    let xl = x.saturating_sub(1);
    let xr = (x + 1).min(width - 1);
    let yt = y.saturating_sub(1);
    let yb = (y + 1).min(height - 1);
    let at = |xx: usize, yy: usize| data[yy * width + xx];
    let (tl, t, tr) = (at(xl, yt), at(x, yt), at(xr, yt));
    let (l, r) = (at(xl, y), at(xr, y));
    let (bl, b, br) = (at(xl, yb), at(x, yb), at(xr, yb));
    let gx = (tr + 2.0 * r + br) - (tl + 2.0 * l + bl);
    let gy = (bl + 2.0 * b + br) - (tl + 2.0 * t + tr);
    (gx, gy)
}

fn ensure_min(img_dims: (usize, usize), min: usize) -> Result<()> {
    if img_dims.0 < min || img_dims.1 < min {
        return Err(Error::TooSmall {
            width: img_dims.0,
            height: img_dims.1,
            min_width: min,
            min_height: min,
        });
    }
    Ok(())
}

pub(crate) fn ensure_min_size(img: &Image, min: usize) -> Result<()> {
    ensure_min(img.dims(), min)
}

pub fn sobel(img: &Image) -> Result<EdgeMap> {
    ensure_min_size(img, 3)?;
    let (w, h) = img.dims();
    let mut magnitude = Vec::with_capacity(img.len());
    let mut angle = Vec::with_capacity(img.len());
    for y in 0..h {
        for x in 0..w {
            let (gx, gy) = sobel_at(&img.data, w, h, x, y);
            magnitude.push((gx * gx + gy * gy).sqrt());
            angle.push(gy.atan2(gx));
        }
    }
    Ok(EdgeMap {
        width: w,
        height: h,
        magnitude,
        angle,
    })
}

/// Normalized 1-D Gaussian taps, radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gaussian sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

#[inline]
fn convolve_row_at(data: &[f64], width: usize, x: usize, y: usize, taps: &[f64]) -> f64 {
    let r = (taps.len() / 2) as isize;
    let row = &data[y * width..(y + 1) * width];
    let mut acc = 0.0;
    for (k, &w) in taps.iter().enumerate() {
        let xx = (x as isize + k as isize - r).clamp(0, width as isize - 1) as usize;
        acc += w * row[xx];
    }
    acc
}

#[inline]
fn convolve_col_at(data: &[f64], width: usize, height: usize, x: usize, y: usize, taps: &[f64]) -> f64 {
    let r = (taps.len() / 2) as isize;
    let mut acc = 0.0;
    for (k, &w) in taps.iter().enumerate() {
        let yy = (y as isize + k as isize - r).clamp(0, height as isize - 1) as usize;
        acc += w * data[yy * width + x];
    }
    acc
}

/// Separable blur restricted to `[x0, x1) x [y0, y1)`, writing into `out`
/// (full-size buffer). Produces bit-identical values to [`blur_with`].
pub(crate) fn blur_region(
    src: &[f64],
    width: usize,
    height: usize,
    taps: &[f64],
    rect: (usize, usize, usize, usize),
    scratch: &mut Vec<f64>,
    out: &mut [f64],
) {
    let (x0, y0, x1, y1) = rect;
    if x0 >= x1 || y0 >= y1 {
        return;
    }
    let r = taps.len() / 2;
    let ry0 = y0.saturating_sub(r);
    let ry1 = (y1 + r).min(height);
    let cols = x1 - x0;
    scratch.clear();
    scratch.resize(cols * (ry1 - ry0), 0.0);
    for yy in ry0..ry1 {
        for x in x0..x1 {
            scratch[(yy - ry0) * cols + (x - x0)] = convolve_row_at(src, width, x, yy, taps);
        }
    }
    for y in y0..y1 {
        for x in x0..x1 {
            let mut acc = 0.0;
            for (k, &w) in taps.iter().enumerate() {
                let yy = (y as isize + k as isize - r as isize).clamp(0, height as isize - 1) as usize;
                acc += w * scratch[(yy - ry0) * cols + (x - x0)];
            }
            out[y * width + x] = acc;
        }
    }
}

pub(crate) fn blur_with(img: &Image, taps: &[f64]) -> Image {
    let (w, h) = img.dims();
    let mut horiz = vec![0.0; img.len()];
    for y in 0..h {
        for x in 0..w {
            horiz[y * w + x] = convolve_row_at(&img.data, w, x, y, taps);
        }
    }
    let mut out = vec![0.0; img.len()];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = convolve_col_at(&horiz, w, h, x, y, taps);
        }
    }
    Image {
        width: w,
        height: h,
        data: out,
    }
}

pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    let taps = gaussian_kernel(sigma)?;
    Ok(blur_with(img, &taps))
}

/// Bilinear resampling to an explicit size using pixel-center alignment
/// (`src = (dst + 0.5) / scale - 0.5`, clamped to the source raster).
pub fn resample_to(img: &Image, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "resample target {width}x{height} is empty"
        )));
    }
    let sx = width as f64 / img.width as f64;
    let sy = height as f64 / img.height as f64;
    Ok(Image::from_fn(width, height, |x, y| {
        let src_x = (x as f64 + 0.5) / sx - 0.5;
        let src_y = (y as f64 + 0.5) / sy - 0.5;
        sample_plane(&img.data, img.width, img.height, src_x, src_y)
    }))
}

pub fn resample_scale(img: &Image, scale: f64) -> Result<Image> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let w = (scale * img.width as f64).round();
    let h = (scale * img.height as f64).round();
    if w < 1.0 || h < 1.0 {
        return Err(Error::TooSmall {
            width: w as usize,
            height: h as usize,
            min_width: 1,
            min_height: 1,
        });
    }
    if w as usize == img.width && h as usize == img.height {
        return Ok(img.clone());
    }
    resample_to(img, w as usize, h as usize)
}

/// 2x2 box reduction; dimensions must be even.
pub fn downsample2(img: &Image) -> Result<Image> {
    if !img.width.is_multiple_of(2) || !img.height.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "cannot halve {}x{}",
            img.width, img.height
        )));
    }
    Ok(Image::from_fn(img.width / 2, img.height / 2, |x, y| {
        let (a, b) = (img.get(2 * x, 2 * y), img.get(2 * x + 1, 2 * y));
        let (c, d) = (img.get(2 * x, 2 * y + 1), img.get(2 * x + 1, 2 * y + 1));
        ((a + b) + (c + d)) * 0.25
    }))
}
