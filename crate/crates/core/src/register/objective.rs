use serde::{Deserialize, Serialize};

use super::config::{RegisterConfig, Weights};
use super::grid::{densify, ControlGrid};
use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{gaussian_blur, warp, DisplacementField, Image};
use crate::losses::{edge_l2_loss, epr_loss, nda_loss, smooth_loss, ss_terms, BranchView};
use crate::proxy::{ipdg_field, ipdg_image, pdg_apply, TransformTranscript};

/// Weighted objective terms, summed over branches where both are present.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub nda: f64,
    pub edge_l2: f64,
    pub epr: f64,
    pub smooth: f64,
    pub ic: f64,
    pub ss: f64,
    pub total: f64,
}

impl ObjectiveTerms {
    pub(crate) fn from_parts(nda: f64, edge_l2: f64, epr: f64, smooth: f64, ic: f64, ss: f64) -> Self {
        ObjectiveTerms {
            nda,
            edge_l2,
            epr,
            smooth,
            ic,
            ss,
            total: nda + edge_l2 + epr + smooth + ic + ss,
        }
    }

    fn plus(&self, o: &ObjectiveTerms) -> ObjectiveTerms {
        ObjectiveTerms::from_parts(
            self.nda + o.nda,
            self.edge_l2 + o.edge_l2,
            self.epr + o.epr,
            self.smooth + o.smooth,
            self.ic + o.ic,
            self.ss + o.ss,
        )
    }

    /// `(name, value)` for every term the configuration keeps, then `total`.
    pub fn named(&self, cfg: &RegisterConfig) -> Vec<(&'static str, f64)> {
        let w = cfg.weights();
        let mut out = Vec::with_capacity(7);
        for (name, weight, value) in [
            ("nda", w.nda, self.nda),
            ("edge_l2", w.edge_l2, self.edge_l2),
            ("epr", w.epr, self.epr),
            ("smooth", w.smooth, self.smooth),
            ("ic", w.ic, self.ic),
            ("ss", w.ss, self.ss),
        ] {
            if weight > 0.0 {
                out.push((name, value));
            }
        }
        out.push(("total", self.total));
        out
    }
}

/// Mean squared residual of `phi_p(p) + phi_n(p + phi_p(p))`.
pub fn inverse_consistency(phi_p: &DisplacementField, phi_n: &DisplacementField) -> Result<f64> {
    ensure_same_dims(phi_p.dims(), phi_n.dims())?;
    let (w, h) = phi_p.dims();
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            sum += ic_at(phi_p, phi_n, x, y);
        }
    }
    Ok(sum / (w * h) as f64)
}

#[inline]
fn ic_at(phi_p: &DisplacementField, phi_n: &DisplacementField, x: usize, y: usize) -> f64 {
    let (px, py) = phi_p.get(x, y);
    let (nx, ny) = phi_n.sample(x as f64 + px, y as f64 + py);
    let (rx, ry) = (px + nx, py + ny);
    rx * rx + ry * ry
}

struct BranchOutputs {
    phi_p: DisplacementField,
    phi_n: DisplacementField,
    t_hat: Image,
    v_hat: Image,
    terms: ObjectiveTerms,
}

fn branch(t: &Image, v: &Image, grid_p: &ControlGrid, grid_n: &ControlGrid, w: &Weights, cfg: &RegisterConfig) -> Result<BranchOutputs> {
    ensure_same_dims(t.dims(), v.dims())?;
    for g in [grid_p, grid_n] {
        ensure_same_dims(t.dims(), (g.width, g.height))?;
        if !g.is_finite() {
            return Err(Error::NonFinite("control grid"));
        }
    }
    let phi_p = densify(grid_p);
    let phi_n = densify(grid_n);
    let t_hat = warp(t, &phi_p)?;
    let v_hat = warp(v, &phi_n)?;
    let loss = &cfg.loss;
    let nda = if w.nda > 0.0 {
        w.nda * (nda_loss(t, v, &t_hat, loss)?.total() + nda_loss(v, t, &v_hat, loss)?.total())
    } else {
        0.0
    };
    let edge_l2 = if w.edge_l2 > 0.0 {
        w.edge_l2 * (edge_l2_loss(&t_hat, v)? + edge_l2_loss(&v_hat, t)?)
    } else {
        0.0
    };
    let epr = if w.epr > 0.0 {
        w.epr * (epr_loss(t, v, &t_hat)? + epr_loss(v, t, &v_hat)?)
    } else {
        0.0
    };
    let smooth = if w.smooth > 0.0 {
        w.smooth * (smooth_loss(&phi_p)? + smooth_loss(&phi_n)?)
    } else {
        0.0
    };
    let ic = if w.ic > 0.0 {
        w.ic * inverse_consistency(&phi_p, &phi_n)?
    } else {
        0.0
    };
    Ok(BranchOutputs {
        phi_p,
        phi_n,
        t_hat,
        v_hat,
        terms: ObjectiveTerms::from_parts(nda, edge_l2, epr, smooth, ic, 0.0),
    })
}

/// Single-branch objective: edge-neighborhood alignment in both directions,
/// edge retention, field smoothness and inverse consistency, weighted per
/// `cfg` (ablation toggles applied).
pub fn intra_objective(
    t: &Image,
    v: &Image,
    grid_p: &ControlGrid,
    grid_n: &ControlGrid,
    cfg: &RegisterConfig,
) -> Result<ObjectiveTerms> {
    Ok(branch(t, v, grid_p, grid_n, &cfg.weights(), cfg)?.terms)
}

/// Forward and backward control grids of one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchGrids {
    pub p: ControlGrid,
    pub n: ControlGrid,
}

/// Full dual-branch objective: the global branch on `(t, v)`, the proxy
/// branch on the transformed pair, and the consistency loss between the
/// global branch and the inverse-transformed proxy branch. Without
/// coupling only the global branch counts.
pub fn dual_objective(
    t: &Image,
    v: &Image,
    transcript: &TransformTranscript,
    global: &BranchGrids,
    proxy: &BranchGrids,
    cfg: &RegisterConfig,
) -> Result<ObjectiveTerms> {
    let w = cfg.weights();
    let g = branch(t, v, &global.p, &global.n, &w, cfg)?;
    if !w.coupling {
        return Ok(g.terms);
    }
    let tp = pdg_apply(t, transcript)?;
    let vp = pdg_apply(v, transcript)?;
    let p = branch(&tp, &vp, &proxy.p, &proxy.n, &w, cfg)?;
    let mut terms = g.terms.plus(&p.terms);
    if w.ss > 0.0 {
        let pg_t = ipdg_image(&p.t_hat, transcript)?;
        let pg_v = ipdg_image(&p.v_hat, transcript)?;
        let pg_p = ipdg_field(&p.phi_p, transcript)?;
        let pg_n = ipdg_field(&p.phi_n, transcript)?;
        let recon = |img: &Image| gaussian_blur(img, cfg.recon_sigma);
        let (rg_t, rg_v, rp_t, rp_v) = (recon(&g.t_hat)?, recon(&g.v_hat)?, recon(&pg_t)?, recon(&pg_v)?);
        let gv = BranchView {
            t_hat: &g.t_hat,
            v_hat: &g.v_hat,
            recon_t: &rg_t,
            recon_v: &rg_v,
            phi_p: &g.phi_p,
            phi_n: &g.phi_n,
        };
        let pv = BranchView {
            t_hat: &pg_t,
            v_hat: &pg_v,
            recon_t: &rp_t,
            recon_v: &rp_v,
            phi_p: &pg_p,
            phi_n: &pg_n,
        };
        let s = ss_terms(&gv, &pv, &cfg.loss)?;
        let ss = if w.recon { s.total() } else { s.aligned + s.field };
        terms = terms.plus(&ObjectiveTerms::from_parts(0.0, 0.0, 0.0, 0.0, 0.0, w.ss * ss));
    }
    Ok(terms)
}

/// Central-difference gradient `(f(x+e) - f(x-e)) / 2e` per parameter.
pub fn fd_gradient(mut objective: impl FnMut(&[f64]) -> Result<f64>, params: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("fd epsilon must be positive, got {eps}")));
    }
    let mut x = params.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let orig = x[k];
        x[k] = orig + eps;
        let fp = objective(&x)?;
        x[k] = orig - eps;
        let fm = objective(&x)?;
        x[k] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite("objective"));
        }
        grad.push((fp - fm) / (2.0 * eps));
    }
    Ok(grad)
}
