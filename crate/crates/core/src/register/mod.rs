//! Dual-branch registration by direct optimization of control-grid fields.
//!
//! Each pyramid level draws one proxy transform and optimizes four grids
//! (forward and backward field for the global branch and for the proxy
//! branch) by finite-difference descent with a step-halving line search.

mod config;
mod engine;
mod grid;
mod objective;

pub use config::{ablation_switches, Ablation, RegisterConfig, Toggles};
pub use grid::{densify, sample_grid, ControlGrid};
pub use objective::{dual_objective, fd_gradient, intra_objective, inverse_consistency, BranchGrids, ObjectiveTerms};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{downsample2, gaussian_blur, warp, DisplacementField, Image};
use crate::proxy::{pdg_apply, pdg_field_apply, pdg_sample_with, TransformTranscript};
use engine::Engine;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub level: usize,
    pub iter: usize,
    pub term_name: String,
    pub value: f64,
}

/// Outcome of the descent at one pyramid level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
    /// False when the iteration cap was hit before a stopping criterion.
    pub converged: bool,
    pub initial: f64,
    pub last: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub phi_p: DisplacementField,
    pub phi_n: DisplacementField,
    pub t_hat: Image,
    pub v_hat: Image,
    pub recon_t: Image,
    pub recon_v: Image,
    /// Final global-branch grids at full resolution.
    pub global: BranchGrids,
    /// Final proxy-branch grids; the level-start initialization when the
    /// branches are uncoupled.
    pub proxy: BranchGrids,
    /// Proxy transform of the finest level.
    pub transcript: TransformTranscript,
    pub final_terms: ObjectiveTerms,
    pub levels: Vec<LevelReport>,
    pub trace: Vec<TraceEntry>,
}

impl RegistrationResult {
    pub fn trace_jsonl(&self) -> Result<String> {
        trace_jsonl(&self.trace)
    }
}

pub fn trace_jsonl(trace: &[TraceEntry]) -> Result<String> {
    let mut out = String::new();
    for e in trace {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

/// Proxy-branch grid seeded from a global-branch grid: the dense field is
/// carried into the transformed frame and read off at the control points.
fn proxy_grid(grid: &ControlGrid, transcript: &TransformTranscript) -> Result<ControlGrid> {
    let moved = pdg_field_apply(&densify(grid), transcript)?;
    sample_grid(&moved, grid.gw, grid.gh)
}

/// Image pyramid, coarsest first.
fn pyramid(img: &Image, levels: usize) -> Result<Vec<Image>> {
    let mut out = vec![img.clone()];
    for _ in 1..levels {
        let next = downsample2(out.last().expect("non-empty"))?;
        out.push(next);
    }
    out.reverse();
    Ok(out)
}

fn check_dims(t: &Image, cfg: &RegisterConfig) -> Result<()> {
    let (w, h) = t.dims();
    let f = 1usize << (cfg.levels - 1);
    let n = cfg.pdg_n.max(1) as usize;
    if w % (f * n) != 0 || h % (f * n) != 0 {
        return Err(Error::Indivisible {
            width: w,
            height: h,
            n: (f * n) as i32,
        });
    }
    if w / f < 3 || h / f < 3 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: 3 * f,
            min_height: 3 * f,
        });
    }
    Ok(())
}

/// Registers `t` (infrared) and `v` (visible) in both directions.
/// Deterministic for fixed inputs, configuration and seed.
pub fn register_pair(t: &Image, v: &Image, cfg: &RegisterConfig, seed: u64) -> Result<RegistrationResult> {
    cfg.validate()?;
    ensure_same_dims(t.dims(), v.dims())?;
    if t.data().iter().chain(v.data()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("input image"));
    }
    check_dims(t, cfg)?;
    let weights = cfg.weights();
    let pt = pyramid(t, cfg.levels)?;
    let pv = pyramid(v, cfg.levels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cw, ch) = pt[0].dims();
    let mut global = [
        ControlGrid::zeros(cfg.grid_w, cfg.grid_h, cw, ch)?,
        ControlGrid::zeros(cfg.grid_w, cfg.grid_h, cw, ch)?,
    ];
    let mut proxy = global.clone();
    let mut transcript = TransformTranscript::identity(cw, ch);
    let mut trace = Vec::new();
    let mut levels = Vec::with_capacity(cfg.levels);
    let mut final_terms = ObjectiveTerms::default();
    for level in 0..cfg.levels {
        let (lw, lh) = pt[level].dims();
        if level > 0 {
            global = [global[0].retarget(lw, lh, 2.0), global[1].retarget(lw, lh, 2.0)];
        }
        transcript = pdg_sample_with(&mut rng, lw, lh, cfg.pdg_n);
        transcript.validate()?;
        proxy = [proxy_grid(&global[0], &transcript)?, proxy_grid(&global[1], &transcript)?];
        let mut engine = Engine::new(
            &pt[level],
            &pv[level],
            &transcript,
            global.clone(),
            weights.coupling.then(|| proxy.clone()),
            cfg,
        )?;
        let report = descend(&mut engine, cfg, level, (lw, lh), &mut trace)?;
        final_terms = engine.terms();
        levels.push(report);
        let grids = engine.grids();
        global = grids[0].clone();
        if let Some(p) = grids.get(1) {
            proxy = p.clone();
        }
    }
    let phi_p = densify(&global[0]);
    let phi_n = densify(&global[1]);
    let t_hat = warp(t, &phi_p)?;
    let v_hat = warp(v, &phi_n)?;
    let recon_t = gaussian_blur(&t_hat, cfg.recon_sigma)?;
    let recon_v = gaussian_blur(&v_hat, cfg.recon_sigma)?;
    let [gp, gn] = global;
    let [pp, pn] = proxy;
    Ok(RegistrationResult {
        phi_p,
        phi_n,
        t_hat,
        v_hat,
        recon_t,
        recon_v,
        global: BranchGrids { p: gp, n: gn },
        proxy: BranchGrids { p: pp, n: pn },
        transcript,
        final_terms,
        levels,
        trace,
    })
}

fn push_terms(trace: &mut Vec<TraceEntry>, cfg: &RegisterConfig, level: usize, iter: usize, terms: &ObjectiveTerms) {
    for (name, value) in terms.named(cfg) {
        trace.push(TraceEntry {
            level,
            iter,
            term_name: name.to_string(),
            value,
        });
    }
}

fn descend(
    engine: &mut Engine,
    cfg: &RegisterConfig,
    level: usize,
    (width, height): (usize, usize),
    trace: &mut Vec<TraceEntry>,
) -> Result<LevelReport> {
    let mut terms = engine.terms();
    let initial = terms.total;
    push_terms(trace, cfg, level, 0, &terms);
    let mut alpha = cfg.step;
    let mut converged = cfg.max_iters == 0 || engine.active().is_empty();
    let mut iterations = 0;
    while !converged && iterations < cfg.max_iters {
        let g = engine.gradient(cfg.fd_eps)?;
        let gmax = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if gmax == 0.0 {
            converged = true;
            break;
        }
        let base = engine.params();
        let mut a = alpha;
        let accepted = loop {
            let trial: Vec<f64> = base.iter().zip(&g).map(|(p, gi)| p - a * gi / gmax).collect();
            let t = engine.set_params(&trial)?;
            if t.total < terms.total {
                break Some(t);
            }
            a *= 0.5;
            if a < cfg.min_step {
                break None;
            }
        };
        let Some(next) = accepted else {
            engine.set_params(&base)?;
            converged = true;
            break;
        };
        iterations += 1;
        let rel = (terms.total - next.total) / terms.total.abs().max(f64::MIN_POSITIVE);
        terms = next;
        push_terms(trace, cfg, level, iterations, &terms);
        alpha = (2.0 * a).min(cfg.max_step);
        if rel < cfg.rel_tol {
            converged = true;
        }
    }
    Ok(LevelReport {
        level,
        width,
        height,
        iterations,
        converged,
        initial,
        last: terms.total,
    })
}

/// Sum of both branches' single-branch objectives under `cfg` for the
/// grids of a finished registration.
pub fn total_intra_objective(t: &Image, v: &Image, result: &RegistrationResult, cfg: &RegisterConfig) -> Result<f64> {
    let g = intra_objective(t, v, &result.global.p, &result.global.n, cfg)?;
    let tp = pdg_apply(t, &result.transcript)?;
    let vp = pdg_apply(v, &result.transcript)?;
    let p = intra_objective(&tp, &vp, &result.proxy.p, &result.proxy.n, cfg)?;
    Ok(g.total + p.total)
}

/// Mean horizontal displacement over `mask` pixels.
pub fn mean_dx_over(field: &DisplacementField, mask: impl Iterator<Item = (usize, usize)>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for (x, y) in mask {
        s += field.get(x, y).0;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}
