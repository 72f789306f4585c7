//! Fusion of the registered infrared image with the visible image.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{gaussian_blur, sobel, sobel_at, Image};
use crate::losses::{fusion_loss, FeaturePair, FusionTerms, LossConfig};

/// Low-pass (global) and residual (local) parts of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDecomposition {
    pub global: Image,
    pub local: Image,
}

pub fn decompose(img: &Image, sigma: f64) -> Result<FeatureDecomposition> {
    let global = gaussian_blur(img, sigma)?;
    let local = img.zip_map(&global, |a, b| a - b)?;
    Ok(FeatureDecomposition { global, local })
}

pub fn fuse_max(a: &Image, b: &Image) -> Result<Image> {
    a.zip_map(b, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FuseMode {
    Max,
    Optimize,
}

impl FuseMode {
    pub fn name(self) -> &'static str {
        match self {
            FuseMode::Max => "max",
            FuseMode::Optimize => "optimize",
        }
    }
}

impl fmt::Display for FuseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FuseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(FuseMode::Max),
            "optimize" => Ok(FuseMode::Optimize),
            _ => Err(Error::InvalidParameter(format!(
                "unknown fusion mode '{s}' (expected max or optimize)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuseConfig {
    pub mode: FuseMode,
    /// Blur of the global/local decomposition.
    pub sigma: f64,
    pub iters: usize,
    /// Pixel-value step of the projected descent.
    pub step: f64,
    pub loss: LossConfig,
}

impl Default for FuseConfig {
    fn default() -> Self {
        FuseConfig {
            mode: FuseMode::Max,
            sigma: 2.0,
            iters: 100,
            step: 0.01,
            loss: LossConfig::default(),
        }
    }
}

impl FuseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter("fusion sigma and step must be positive".into()));
        }
        self.loss.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuseOutcome {
    pub fused: Image,
    pub initial: FusionTerms,
    pub best: FusionTerms,
    /// Total loss per iteration, starting with the initialization.
    pub trace: Vec<f64>,
}

/// Decomposition features of both sources; they do not depend on the
/// fused image.
pub fn source_features(t_hat: &Image, v: &Image, sigma: f64) -> Result<FeaturePair> {
    let dt = decompose(t_hat, sigma)?;
    let dv = decompose(v, sigma)?;
    Ok(FeaturePair {
        global_t: dt.global,
        global_v: dv.global,
        local_t: dt.local,
        local_v: dv.local,
    })
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Subgradient of the two data terms with respect to the fused pixels.
/// The Sobel term is differentiated through the replicate-padded kernels
/// by scattering each pixel's coefficient back to the taps it read.
fn data_subgradient(f: &Image, target: &[f64], target_grad: &[f64], cfg: &LossConfig) -> Vec<f64> {
    let (w, h) = f.dims();
    let n = (w * h) as f64;
    let data = f.data();
    let mut g: Vec<f64> = data
        .iter()
        .zip(target)
        .map(|(&a, &b)| cfg.intensity_weight * sign(a - b) / n)
        .collect();
    const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    const KY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    for y in 0..h {
        for x in 0..w {
            let (gx, gy) = sobel_at(data, w, h, x, y);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let s = cfg.gradient_weight * sign(mag - target_grad[y * w + x]) / n;
            if s == 0.0 {
                continue;
            }
            let (cx, cy) = (s * gx / mag, s * gy / mag);
            for (dy, (rx, ry)) in KX.iter().zip(&KY).enumerate() {
                let yy = (y + dy).saturating_sub(1).min(h - 1);
                for dx in 0..3 {
                    let xx = (x + dx).saturating_sub(1).min(w - 1);
                    g[yy * w + xx] += cx * rx[dx] + cy * ry[dx];
                }
            }
        }
    }
    g
}

/// Projected subgradient descent on the fusion loss from the max fusion,
/// keeping pixels in [0, 1]. The feature-correlation term does not depend
/// on the fused pixels and only enters the reported loss.
pub fn fuse_optimize(t_hat: &Image, v: &Image, cfg: &FuseConfig) -> Result<FuseOutcome> {
    cfg.validate()?;
    ensure_same_dims(t_hat.dims(), v.dims())?;
    let features = source_features(t_hat, v, cfg.sigma)?;
    let target = fuse_max(t_hat, v)?;
    let gt = sobel(t_hat)?;
    let gv = sobel(v)?;
    let target_grad: Vec<f64> = gt.magnitude.iter().zip(&gv.magnitude).map(|(a, b)| a.max(*b)).collect();
    let n = t_hat.len() as f64;
    let mut f = target.clone();
    let initial = fusion_loss(&f, t_hat, v, &features, &cfg.loss)?;
    if !initial.total.is_finite() {
        return Err(Error::NonFinite("fusion loss"));
    }
    let mut best = (initial, f.clone());
    let mut trace = vec![initial.total];
    for it in 0..cfg.iters {
        let g = data_subgradient(&f, target.data(), &target_grad, &cfg.loss);
        let step = cfg.step / ((it + 1) as f64).sqrt();
        for (p, gi) in f.data_mut().iter_mut().zip(&g) {
            *p = (*p - step * n * gi).clamp(0.0, 1.0);
        }
        let terms = fusion_loss(&f, t_hat, v, &features, &cfg.loss)?;
        if !terms.total.is_finite() {
            return Err(Error::NonFinite("fusion loss"));
        }
        trace.push(terms.total);
        if terms.total < best.0.total {
            best = (terms, f.clone());
        }
    }
    Ok(FuseOutcome {
        fused: best.1,
        initial,
        best: best.0,
        trace,
    })
}

pub fn fuse(t_hat: &Image, v: &Image, cfg: &FuseConfig) -> Result<Image> {
    match cfg.mode {
        FuseMode::Max => fuse_max(t_hat, v),
        FuseMode::Optimize => Ok(fuse_optimize(t_hat, v, cfg)?.fused),
    }
}
