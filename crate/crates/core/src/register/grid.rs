use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::DisplacementField;
use crate::proxy::Rect;

/// Coarse grid of control-point displacements spanning a raster; the dense
/// field is its bilinear interpolation. Control point `(i, j)` sits at
/// `(i * (width-1)/(gw-1), j * (height-1)/(gh-1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    pub gw: usize,
    pub gh: usize,
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl ControlGrid {
    pub fn zeros(gw: usize, gh: usize, width: usize, height: usize) -> Result<Self> {
        if gw < 2 || gh < 2 {
            return Err(Error::InvalidParameter(format!(
                "control grid must be at least 2x2, got {gw}x{gh}"
            )));
        }
        if width < 2 || height < 2 {
            return Err(Error::InvalidParameter(format!(
                "control grid target must be at least 2x2, got {width}x{height}"
            )));
        }
        Ok(ControlGrid {
            gw,
            gh,
            width,
            height,
            dx: vec![0.0; gw * gh],
            dy: vec![0.0; gw * gh],
        })
    }

    pub fn constant(gw: usize, gh: usize, width: usize, height: usize, dx: f64, dy: f64) -> Result<Self> {
        let mut g = ControlGrid::zeros(gw, gh, width, height)?;
        g.dx.fill(dx);
        g.dy.fill(dy);
        Ok(g)
    }

    pub fn num_params(&self) -> usize {
        2 * self.gw * self.gh
    }

    /// Flat parameter view: all dx values, then all dy values.
    pub fn param(&self, k: usize) -> f64 {
        let n = self.gw * self.gh;
        if k < n {
            self.dx[k]
        } else {
            self.dy[k - n]
        }
    }

    pub fn set_param(&mut self, k: usize, v: f64) {
        let n = self.gw * self.gh;
        if k < n {
            self.dx[k] = v;
        } else {
            self.dy[k - n] = v;
        }
    }

    pub fn params(&self) -> Vec<f64> {
        self.dx.iter().chain(&self.dy).copied().collect()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let n = self.gw * self.gh;
        self.dx.copy_from_slice(&p[..n]);
        self.dy.copy_from_slice(&p[n..]);
    }

    pub fn is_finite(&self) -> bool {
        self.dx.iter().chain(&self.dy).all(|v| v.is_finite())
    }

    pub fn control_position(&self, i: usize, j: usize) -> (f64, f64) {
        (
            i as f64 * (self.width - 1) as f64 / (self.gw - 1) as f64,
            j as f64 * (self.height - 1) as f64 / (self.gh - 1) as f64,
        )
    }

    /// Same control values on a raster of another size, vectors multiplied
    /// by `scale` (pyramid level change).
    pub fn retarget(&self, width: usize, height: usize, scale: f64) -> ControlGrid {
        ControlGrid {
            gw: self.gw,
            gh: self.gh,
            width,
            height,
            dx: self.dx.iter().map(|v| v * scale).collect(),
            dy: self.dy.iter().map(|v| v * scale).collect(),
        }
    }
}

/// Per-axis interpolation table: for each pixel the lower control index and
/// the fractional weight of the upper one.
#[derive(Debug, Clone)]
pub(crate) struct AxisTable {
    lower: Vec<usize>,
    frac: Vec<f64>,
    /// Pixel range `[start, end)` with non-zero weight for each control index.
    support: Vec<(usize, usize)>,
}

impl AxisTable {
    pub fn new(pixels: usize, controls: usize) -> Self {
        let mut lower = Vec::with_capacity(pixels);
        let mut frac = Vec::with_capacity(pixels);
        let scale = (controls - 1) as f64 / (pixels - 1) as f64;
        for p in 0..pixels {
            let u = p as f64 * scale;
            let i0 = (u.floor() as usize).min(controls - 2);
            lower.push(i0);
            frac.push(u - i0 as f64);
        }
        let mut support = vec![(usize::MAX, 0); controls];
        for p in 0..pixels {
            let i0 = lower[p];
            let f = frac[p];
            let mut touch = |i: usize| {
                let s = &mut support[i];
                s.0 = s.0.min(p);
                s.1 = s.1.max(p + 1);
            };
            if f < 1.0 {
                touch(i0);
            }
            if f > 0.0 {
                touch(i0 + 1);
            }
        }
        AxisTable {
            lower,
            frac,
            support,
        }
    }

    pub fn support(&self, i: usize) -> (usize, usize) {
        self.support[i]
    }
}

/// Interpolation tables for one grid layout on one raster.
#[derive(Debug, Clone)]
pub(crate) struct GridLayout {
    pub gw: usize,
    pub gh: usize,
    xs: AxisTable,
    ys: AxisTable,
}

impl GridLayout {
    pub fn new(gw: usize, gh: usize, width: usize, height: usize) -> Self {
        GridLayout {
            gw,
            gh,
            xs: AxisTable::new(width, gw),
            ys: AxisTable::new(height, gh),
        }
    }

    pub fn for_grid(g: &ControlGrid) -> Self {
        GridLayout::new(g.gw, g.gh, g.width, g.height)
    }

    #[inline]
    pub fn interpolate(&self, values: &[f64], x: usize, y: usize) -> f64 {
        let (i0, fx) = (self.xs.lower[x], self.xs.frac[x]);
        let (j0, fy) = (self.ys.lower[y], self.ys.frac[y]);
        let gw = self.gw;
        let top = values[j0 * gw + i0] * (1.0 - fx) + values[j0 * gw + i0 + 1] * fx;
        let bottom = values[(j0 + 1) * gw + i0] * (1.0 - fx) + values[(j0 + 1) * gw + i0 + 1] * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Pixels influenced by flat parameter `k`.
    pub fn support_rect(&self, k: usize) -> Rect {
        let c = k % (self.gw * self.gh);
        let (i, j) = (c % self.gw, c / self.gw);
        let (x0, x1) = self.xs.support(i);
        let (y0, y1) = self.ys.support(j);
        Rect { x0, y0, x1, y1 }
    }
}

pub fn densify(grid: &ControlGrid) -> DisplacementField {
    let layout = GridLayout::for_grid(grid);
    let mut field = DisplacementField::zeros(grid.width, grid.height);
    for y in 0..grid.height {
        for x in 0..grid.width {
            let i = y * grid.width + x;
            field.dx[i] = layout.interpolate(&grid.dx, x, y);
            field.dy[i] = layout.interpolate(&grid.dy, x, y);
        }
    }
    field
}

/// Control values read off a dense field at the nearest pixel to each
/// control point.
pub fn sample_grid(field: &DisplacementField, gw: usize, gh: usize) -> Result<ControlGrid> {
    let (w, h) = field.dims();
    let mut g = ControlGrid::zeros(gw, gh, w, h)?;
    for j in 0..gh {
        for i in 0..gw {
            let (px, py) = g.control_position(i, j);
            let (x, y) = (px.round() as usize, py.round() as usize);
            let (dx, dy) = field.get(x.min(w - 1), y.min(h - 1));
            g.dx[j * gw + i] = dx;
            g.dy[j * gw + i] = dy;
        }
    }
    Ok(g)
}
