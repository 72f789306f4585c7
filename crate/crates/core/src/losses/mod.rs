//! Objective terms for registration and fusion.

mod nda;
mod ssim;

pub use nda::{effective_edges, nda_loss, EdgePixel, EffectiveEdgeSet, NdaTerms};
pub(crate) use nda::{first_match, second_match, SearchOrder};
pub use ssim::{mse, recp_loss, ssim, SSIM_C1, SSIM_C2, SSIM_SIGMA, SSIM_WINDOW};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{sobel, DisplacementField, Image};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Effective-edge threshold on Sobel magnitude.
    pub mu: f64,
    /// L1 weight in the branch-consistency loss.
    pub w1: f64,
    /// L2 weight in the branch-consistency loss.
    pub w2: f64,
    /// Denominator offset of the feature-correlation loss; must exceed 1.
    pub epsilon: f64,
    /// Edge search radius in pixels.
    pub radius: usize,
    pub dec_weight: f64,
    pub intensity_weight: f64,
    pub gradient_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            mu: 1e-4,
            w1: 5.0,
            w2: 1.0,
            epsilon: 1.01,
            radius: 7,
            dec_weight: 1.0,
            intensity_weight: 1.0,
            gradient_weight: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.mu > 0.0) {
            return bad("mu must be positive");
        }
        if !(self.epsilon > 1.0) {
            return bad("epsilon must exceed 1");
        }
        if self.radius < 1 {
            return bad("radius must be at least 1");
        }
        let weights = [
            self.w1,
            self.w2,
            self.dec_weight,
            self.intensity_weight,
            self.gradient_weight,
        ];
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return bad("loss weights must be finite and non-negative");
        }
        Ok(())
    }
}

/// Edge pixel retention: mean of `|(aligned - other)^2 - (source - other)^2|`.
pub fn epr_loss(source: &Image, other: &Image, aligned: &Image) -> Result<f64> {
    ensure_same_dims(source.dims(), other.dims())?;
    ensure_same_dims(source.dims(), aligned.dims())?;
    let n = source.len() as f64;
    let sum: f64 = source
        .data()
        .iter()
        .zip(other.data())
        .zip(aligned.data())
        .map(|((&t, &v), &a)| epr_at(t, v, a))
        .sum();
    Ok(sum / n)
}

#[inline]
pub(crate) fn epr_at(source: f64, other: f64, aligned: f64) -> f64 {
    ((aligned - other) * (aligned - other) - (source - other) * (source - other)).abs()
}

/// Plain edge-strength L2 between the aligned image and the other modality.
pub fn edge_l2_loss(aligned: &Image, other: &Image) -> Result<f64> {
    ensure_same_dims(aligned.dims(), other.dims())?;
    let ea = sobel(aligned)?;
    let eo = sobel(other)?;
    Ok(ea
        .magnitude
        .iter()
        .zip(&eo.magnitude)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / aligned.len() as f64)
}

/// Forward-difference smoothness: mean squared x-difference plus mean
/// squared y-difference, each summed over both vector components.
pub fn smooth_loss(field: &DisplacementField) -> Result<f64> {
    let (w, h) = field.dims();
    if w < 2 || h < 2 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: 2,
            min_height: 2,
        });
    }
    let (sx, sy) = smooth_sums(field);
    Ok(sx / ((w - 1) * h) as f64 + sy / (w * (h - 1)) as f64)
}

pub(crate) fn smooth_sums(field: &DisplacementField) -> (f64, f64) {
    let (w, h) = field.dims();
    let (mut sx, mut sy) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let (a, b) = smooth_at(&field.dx, &field.dy, w, h, x, y);
            sx += a;
            sy += b;
        }
    }
    (sx, sy)
}

/// Squared forward differences owned by pixel `(x, y)`: `(x-term, y-term)`.
#[inline]
pub(crate) fn smooth_at(dx: &[f64], dy: &[f64], w: usize, h: usize, x: usize, y: usize) -> (f64, f64) {
    let i = y * w + x;
    let mut sx = 0.0;
    let mut sy = 0.0;
    if x + 1 < w {
        let (a, b) = (dx[i + 1] - dx[i], dy[i + 1] - dy[i]);
        sx = a * a + b * b;
    }
    if y + 1 < h {
        let (a, b) = (dx[i + w] - dx[i], dy[i + w] - dy[i]);
        sy = a * a + b * b;
    }
    (sx, sy)
}

/// Pearson correlation over pixels; zero when either input has no variance.
pub fn correlation(a: &Image, b: &Image) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let ma = a.mean();
    let mb = b.mean();
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&p, &q) in a.data().iter().zip(b.data()) {
        let (da, db) = (p - ma, q - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Ok(0.0);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Global/local feature decorrelation loss:
/// `cc(global_t, global_v)^2 / (cc(local_t, local_v) + epsilon)`.
pub fn recf_loss(
    global_t: &Image,
    global_v: &Image,
    local_t: &Image,
    local_v: &Image,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must exceed 1, got {epsilon}"
        )));
    }
    let cg = correlation(global_t, global_v)?;
    let cl = correlation(local_t, local_v)?;
    Ok(cg * cg / (cl + epsilon))
}

/// Global and local feature maps of both sources.
#[derive(Debug, Clone)]
pub struct FeaturePair {
    pub global_t: Image,
    pub global_v: Image,
    pub local_t: Image,
    pub local_v: Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionTerms {
    pub dec: f64,
    pub intensity: f64,
    pub gradient: f64,
    pub total: f64,
}

/// Fusion objective: feature-correlation term plus per-pixel L1 distance of
/// the fused image (and of its Sobel magnitude) to the elementwise maximum
/// of the sources, each normalized by the pixel count.
pub fn fusion_loss(
    fused: &Image,
    ir: &Image,
    vis: &Image,
    features: &FeaturePair,
    cfg: &LossConfig,
) -> Result<FusionTerms> {
    ensure_same_dims(fused.dims(), ir.dims())?;
    ensure_same_dims(fused.dims(), vis.dims())?;
    let dec = recf_loss(
        &features.global_t,
        &features.global_v,
        &features.local_t,
        &features.local_v,
        cfg.epsilon,
    )?;
    let (intensity, gradient) = fusion_data_terms(fused, ir, vis)?;
    Ok(FusionTerms {
        dec,
        intensity,
        gradient,
        total: cfg.dec_weight * dec + cfg.intensity_weight * intensity + cfg.gradient_weight * gradient,
    })
}

pub(crate) fn fusion_data_terms(fused: &Image, ir: &Image, vis: &Image) -> Result<(f64, f64)> {
    let n = fused.len() as f64;
    let intensity = fused
        .data()
        .iter()
        .zip(ir.data())
        .zip(vis.data())
        .map(|((&f, &t), &v)| (f - t.max(v)).abs())
        .sum::<f64>()
        / n;
    let gf = sobel(fused)?;
    let gt = sobel(ir)?;
    let gv = sobel(vis)?;
    let gradient = gf
        .magnitude
        .iter()
        .zip(&gt.magnitude)
        .zip(&gv.magnitude)
        .map(|((&f, &t), &v)| (f - t.max(v)).abs())
        .sum::<f64>()
        / n;
    Ok((intensity, gradient))
}

/// Borrowed outputs of one registration branch, all in the global frame.
#[derive(Debug, Clone, Copy)]
pub struct BranchView<'a> {
    pub t_hat: &'a Image,
    pub v_hat: &'a Image,
    pub recon_t: &'a Image,
    pub recon_v: &'a Image,
    pub phi_p: &'a DisplacementField,
    pub phi_n: &'a DisplacementField,
}

/// Weighted parts of the branch-consistency loss.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SsTerms {
    pub aligned: f64,
    pub recon: f64,
    pub field: f64,
}

impl SsTerms {
    pub fn total(&self) -> f64 {
        self.aligned + self.recon + self.field
    }
}

fn image_l1_l2(a: &Image, b: &Image) -> Result<(f64, f64)> {
    ensure_same_dims(a.dims(), b.dims())?;
    let n = a.len() as f64;
    let (mut l1, mut l2) = (0.0, 0.0);
    for (&p, &q) in a.data().iter().zip(b.data()) {
        let d = p - q;
        l1 += d.abs();
        l2 += d * d;
    }
    Ok((l1 / n, l2 / n))
}

fn field_l1_l2(a: &DisplacementField, b: &DisplacementField) -> Result<(f64, f64)> {
    ensure_same_dims(a.dims(), b.dims())?;
    let n = a.dx.len() as f64;
    let (mut l1, mut l2) = (0.0, 0.0);
    for i in 0..a.dx.len() {
        let (ex, ey) = (a.dx[i] - b.dx[i], a.dy[i] - b.dy[i]);
        l1 += ex.abs() + ey.abs();
        l2 += ex * ex + ey * ey;
    }
    Ok((l1 / n, l2 / n))
}

/// Branch-consistency terms between the global branch and the
/// pseudo-global (inverse-transformed proxy) branch:
/// `w1 * L1 + w2 * L2` over aligned images, reconstructions and fields.
pub fn ss_terms(global: &BranchView<'_>, pseudo: &BranchView<'_>, cfg: &LossConfig) -> Result<SsTerms> {
    let pair = |(l1, l2): (f64, f64)| cfg.w1 * l1 + cfg.w2 * l2;
    Ok(SsTerms {
        aligned: pair(image_l1_l2(global.t_hat, pseudo.t_hat)?)
            + pair(image_l1_l2(global.v_hat, pseudo.v_hat)?),
        recon: pair(image_l1_l2(global.recon_t, pseudo.recon_t)?)
            + pair(image_l1_l2(global.recon_v, pseudo.recon_v)?),
        field: pair(field_l1_l2(global.phi_p, pseudo.phi_p)?)
            + pair(field_l1_l2(global.phi_n, pseudo.phi_n)?),
    })
}

pub fn ss_loss(global: &BranchView<'_>, pseudo: &BranchView<'_>, cfg: &LossConfig) -> Result<f64> {
    Ok(ss_terms(global, pseudo, cfg)?.total())
}
