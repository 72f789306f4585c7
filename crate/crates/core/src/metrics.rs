//! Fusion quality metrics: Qabf, VIFF, SF, AG, MG and EI.
//!
//! Single-image statistics work on intensities scaled to [0, 255]. Forward
//! differences are taken over pixels that have both a right and a lower
//! neighbor, so an image of size W x H contributes (W - 1)(H - 1) samples.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{gaussian_kernel, sobel, sobel_at, Image};

const SCALE: f64 = 255.0;

pub const QABF_GAMMA_G: f64 = 0.9994;
pub const QABF_KAPPA_G: f64 = -15.0;
pub const QABF_SIGMA_G: f64 = 0.5;
pub const QABF_GAMMA_A: f64 = 0.9879;
pub const QABF_KAPPA_A: f64 = -22.0;
pub const QABF_SIGMA_A: f64 = 0.8;

pub const VIFF_SCALES: usize = 4;
pub const VIFF_BLOCK: usize = 8;
/// Sensor noise variance on the [0, 255] scale.
pub const VIFF_NOISE_VAR: f64 = 2.0;
pub const VIFF_MIN_SIZE: usize = 16;
const VIFF_PYRAMID_SIGMA: f64 = 1.0;

fn check_min(img: &Image, min: usize) -> Result<()> {
    let (w, h) = img.dims();
    if w < min || h < min {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: min,
            min_height: min,
        });
    }
    Ok(())
}

fn forward_diffs(img: &Image) -> impl Iterator<Item = (f64, f64)> + '_ {
    let (w, h) = img.dims();
    let d = img.data();
    (0..h - 1).flat_map(move |y| {
        (0..w - 1).map(move |x| {
            let p = d[y * w + x];
            ((d[y * w + x + 1] - p) * SCALE, (d[(y + 1) * w + x] - p) * SCALE)
        })
    })
}

/// Average gradient: mean of `sqrt((dx^2 + dy^2) / 2)`.
pub fn ag(img: &Image) -> Result<f64> {
    check_min(img, 3)?;
    let n = ((img.width() - 1) * (img.height() - 1)) as f64;
    Ok(forward_diffs(img).map(|(dx, dy)| ((dx * dx + dy * dy) / 2.0).sqrt()).sum::<f64>() / n)
}

/// Mean gradient: mean of `(|dx| + |dy|) / 2`.
pub fn mg(img: &Image) -> Result<f64> {
    check_min(img, 3)?;
    let n = ((img.width() - 1) * (img.height() - 1)) as f64;
    Ok(forward_diffs(img).map(|(dx, dy)| (dx.abs() + dy.abs()) / 2.0).sum::<f64>() / n)
}

/// Edge intensity: mean Sobel magnitude.
pub fn ei(img: &Image) -> Result<f64> {
    check_min(img, 3)?;
    let e = sobel(img)?;
    Ok(e.magnitude.iter().sum::<f64>() * SCALE / img.len() as f64)
}

/// Spatial frequency `sqrt(RF^2 + CF^2)`.
pub fn sf(img: &Image) -> Result<f64> {
    check_min(img, 3)?;
    let (w, h) = img.dims();
    let d = img.data();
    let mut row = 0.0;
    let mut col = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = d[y * w + x];
            if x + 1 < w {
                let v = (d[y * w + x + 1] - p) * SCALE;
                row += v * v;
            }
            if y + 1 < h {
                let v = (d[(y + 1) * w + x] - p) * SCALE;
                col += v * v;
            }
        }
    }
    let rf2 = row / (h * (w - 1)) as f64;
    let cf2 = col / ((h - 1) * w) as f64;
    Ok((rf2 + cf2).sqrt())
}

struct EdgeInfo {
    strength: Vec<f64>,
    orientation: Vec<f64>,
}

fn edge_info(img: &Image) -> EdgeInfo {
    let (w, h) = img.dims();
    let mut strength = Vec::with_capacity(img.len());
    let mut orientation = Vec::with_capacity(img.len());
    for y in 0..h {
        for x in 0..w {
            let (gx, gy) = sobel_at(img.data(), w, h, x, y);
            strength.push((gx * gx + gy * gy).sqrt());
            orientation.push(if gx == 0.0 {
                std::f64::consts::FRAC_PI_2
            } else {
                (gy / gx).atan()
            });
        }
    }
    EdgeInfo { strength, orientation }
}

/// Edge preservation of one source in the fused image at one pixel.
fn preservation(gs: f64, as_: f64, gf: f64, af: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let g = if gs == gf {
        1.0
    } else if gs > gf {
        gf / gs
    } else {
        gs / gf
    };
    let d = (as_ - af).abs() % PI;
    let a = 1.0 - d.min(PI - d) / FRAC_PI_2;
    let qg = QABF_GAMMA_G / (1.0 + (QABF_KAPPA_G * (g - QABF_SIGMA_G)).exp());
    let qa = QABF_GAMMA_A / (1.0 + (QABF_KAPPA_A * (a - QABF_SIGMA_A)).exp());
    qg * qa
}

/// Edge-strength weighted preservation of the edges of `a` and `b` in `f`.
/// Zero when neither source has an edge.
pub fn qabf(a: &Image, b: &Image, f: &Image) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    ensure_same_dims(a.dims(), f.dims())?;
    check_min(a, 3)?;
    let (ea, eb, ef) = (edge_info(a), edge_info(b), edge_info(f));
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..a.len() {
        let (wa, wb) = (ea.strength[i], eb.strength[i]);
        if wa > 0.0 {
            num += wa * preservation(wa, ea.orientation[i], ef.strength[i], ef.orientation[i]);
        }
        if wb > 0.0 {
            num += wb * preservation(wb, eb.orientation[i], ef.strength[i], ef.orientation[i]);
        }
        den += wa + wb;
    }
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Separable blur whose taps sit `step` pixels apart, replicated borders.
fn dilated_blur(img: &Image, taps: &[f64], step: usize) -> Image {
    let (w, h) = img.dims();
    let r = (taps.len() / 2) as isize;
    let at = |c: usize, k: usize, n: usize| (c as isize + (k as isize - r) * step as isize).clamp(0, n as isize - 1) as usize;
    let rows = Image::from_fn(w, h, |x, y| taps.iter().enumerate().map(|(k, t)| t * img.get(at(x, k, w), y)).sum());
    Image::from_fn(w, h, |x, y| taps.iter().enumerate().map(|(k, t)| t * rows.get(x, at(y, k, h))).sum())
}

#[derive(Default, Clone, Copy)]
struct BlockStats {
    var_r: f64,
    var_f: f64,
    cov: f64,
}

/// Statistics over the `bw x bh` window anchored at `(x0, y0)` whose samples
/// are `step` pixels apart.
fn block_stats(r: &Image, f: &Image, (x0, y0): (usize, usize), (bw, bh): (usize, usize), step: usize) -> BlockStats {
    let n = (bw * bh) as f64;
    let (mut sr, mut sf) = (0.0, 0.0);
    for y in (y0..).step_by(step).take(bh) {
        for x in (x0..).step_by(step).take(bw) {
            sr += r.get(x, y) * SCALE;
            sf += f.get(x, y) * SCALE;
        }
    }
    let (mr, mf) = (sr / n, sf / n);
    let mut s = BlockStats::default();
    for y in (y0..).step_by(step).take(bh) {
        for x in (x0..).step_by(step).take(bw) {
            let dr = r.get(x, y) * SCALE - mr;
            let df = f.get(x, y) * SCALE - mf;
            s.var_r += dr * dr;
            s.var_f += df * df;
            s.cov += dr * df;
        }
    }
    s.var_r /= n;
    s.var_f /= n;
    s.cov /= n;
    s
}

/// `(distorted information, reference information)` of one block under the
/// gain-plus-noise channel model.
fn block_information(s: BlockStats) -> (f64, f64) {
    let (g, sv) = if s.var_r <= 0.0 {
        (0.0, s.var_f)
    } else {
        let g = s.cov / s.var_r;
        if g < 0.0 {
            (0.0, s.var_f)
        } else {
            (g, (s.var_f - g * s.cov).max(0.0))
        }
    };
    let vid = (1.0 + g * g * s.var_r / (sv + VIFF_NOISE_VAR)).log2();
    let vind = (1.0 + s.var_r / VIFF_NOISE_VAR).log2();
    (vid, vind)
}

/// Multi-scale fusion visual information fidelity.
///
/// The pyramid is undecimated: scale `s` blurs scale `s - 1` with taps
/// `2^(s-1)` pixels apart and reads 8x8 windows whose samples are `2^s`
/// apart, at every anchor where the window fits. This covers every sampling
/// phase of the decimated pyramid, so the value does not depend on where the
/// image origin falls. Windows shrink to `ceil(side / 2^s)` samples along
/// short axes. Each window takes the source carrying more reference
/// information; scales without reference information are left out of the
/// mean, and the result is 0 when every scale is.
pub fn viff(a: &Image, b: &Image, f: &Image) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    ensure_same_dims(a.dims(), f.dims())?;
    check_min(a, VIFF_MIN_SIZE)?;
    let taps = gaussian_kernel(VIFF_PYRAMID_SIGMA)?;
    let (w, h) = a.dims();
    let (mut a, mut b, mut f) = (a.clone(), b.clone(), f.clone());
    let mut ratios = Vec::with_capacity(VIFF_SCALES);
    for scale in 0..VIFF_SCALES {
        let step = 1usize << scale;
        if scale > 0 {
            a = dilated_blur(&a, &taps, step / 2);
            b = dilated_blur(&b, &taps, step / 2);
            f = dilated_blur(&f, &taps, step / 2);
        }
        let size = (VIFF_BLOCK.min(w.div_ceil(step)), VIFF_BLOCK.min(h.div_ceil(step)));
        let (span_w, span_h) = ((size.0 - 1) * step + 1, (size.1 - 1) * step + 1);
        let (mut num, mut den) = (0.0, 0.0);
        for y0 in 0..=h - span_h {
            for x0 in 0..=w - span_w {
                let ia = block_information(block_stats(&a, &f, (x0, y0), size, step));
                let ib = block_information(block_stats(&b, &f, (x0, y0), size, step));
                let (vid, vind) = if ib.1 > ia.1 { ib } else { ia };
                num += vid;
                den += vind;
            }
        }
        if den > 0.0 {
            ratios.push(num / den);
        }
    }
    if ratios.is_empty() {
        return Ok(0.0);
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pair_id: String,
    pub method: String,
    pub kind: String,
    pub level: usize,
    pub width: usize,
    pub height: usize,
    pub qabf: f64,
    pub viff: f64,
    pub sf: f64,
    pub ag: f64,
    pub mg: f64,
    pub ei: f64,
}

impl MetricReport {
    pub fn labeled(mut self, pair_id: &str, method: &str, kind: &str, level: usize) -> Self {
        self.pair_id = pair_id.to_string();
        self.method = method.to_string();
        self.kind = kind.to_string();
        self.level = level;
        self
    }

    /// Values in table order: Qabf, VIFF, SF, AG, MG, EI.
    pub fn values(&self) -> [f64; 6] {
        [self.qabf, self.viff, self.sf, self.ag, self.mg, self.ei]
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// All six metrics; Qabf and VIFF score `fused` against both sources, the
/// rest describe `fused` alone. Labels are left empty.
pub fn evaluate_pair(t_hat: &Image, v: &Image, fused: &Image) -> Result<MetricReport> {
    ensure_same_dims(t_hat.dims(), v.dims())?;
    ensure_same_dims(t_hat.dims(), fused.dims())?;
    Ok(MetricReport {
        pair_id: String::new(),
        method: String::new(),
        kind: String::new(),
        level: 0,
        width: fused.width(),
        height: fused.height(),
        qabf: qabf(t_hat, v, fused)?,
        viff: viff(t_hat, v, fused)?,
        sf: sf(fused)?,
        ag: ag(fused)?,
        mg: mg(fused)?,
        ei: ei(fused)?,
    })
}
