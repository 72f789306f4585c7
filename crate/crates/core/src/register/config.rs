use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossConfig;

/// Ablation variants of the registration objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ablation {
    /// Edge-neighborhood term replaced by plain Sobel-magnitude L2.
    Exp1,
    /// Edge-neighborhood term removed.
    Exp2,
    /// Reconstruction pairs removed from the branch-consistency loss.
    Exp3,
    /// Only the forward field is optimized; retention and inverse-consistency terms removed.
    Exp4,
    /// Branch-consistency loss removed; the proxy branch is not optimized.
    Exp5,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Exp1,
        Ablation::Exp2,
        Ablation::Exp3,
        Ablation::Exp4,
        Ablation::Exp5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Exp1 => "exp1",
            Ablation::Exp2 => "exp2",
            Ablation::Exp3 => "exp3",
            Ablation::Exp4 => "exp4",
            Ablation::Exp5 => "exp5",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown ablation '{s}' (expected exp1..exp5)")))
    }
}

/// Objective toggles; all off in the default configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Toggles {
    pub edge_l2_instead_of_nda: bool,
    pub drop_nda: bool,
    pub drop_recon: bool,
    pub single_direction: bool,
    pub drop_coupling: bool,
}

impl Toggles {
    pub fn any(&self) -> bool {
        self.edge_l2_instead_of_nda || self.drop_nda || self.drop_recon || self.single_direction || self.drop_coupling
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterConfig {
    pub grid_w: usize,
    pub grid_h: usize,
    /// Initial line-search step, pixels along the max-normalized direction.
    pub step: f64,
    /// Largest step the line search may grow to.
    pub max_step: f64,
    /// Line search gives up below this step.
    pub min_step: f64,
    /// Iteration cap per pyramid level.
    pub max_iters: usize,
    /// Stop a level when the relative decrease of an accepted step falls below this.
    pub rel_tol: f64,
    pub fd_eps: f64,
    pub levels: usize,
    /// Patch grid of the proxy transform at every level.
    pub pdg_n: i32,
    pub lambda_nda: f64,
    pub lambda_epr: f64,
    pub lambda_smooth: f64,
    pub lambda_ic: f64,
    pub lambda_ss: f64,
    /// Blur of the reconstruction surrogate.
    pub recon_sigma: f64,
    pub loss: LossConfig,
    pub toggles: Toggles,
}

impl Default for RegisterConfig {
    fn default() -> Self {
        RegisterConfig {
            grid_w: 8,
            grid_h: 8,
            step: 0.1,
            max_step: 2.0,
            min_step: 1e-3,
            max_iters: 300,
            rel_tol: 1e-5,
            fd_eps: 0.25,
            levels: 3,
            pdg_n: 2,
            lambda_nda: 1.0,
            lambda_epr: 1.0,
            lambda_smooth: 10.0,
            lambda_ic: 0.1,
            lambda_ss: 0.01,
            recon_sigma: 1.0,
            loss: LossConfig::default(),
            toggles: Toggles::default(),
        }
    }
}

/// Effective weights after the toggles are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Weights {
    pub nda: f64,
    pub edge_l2: f64,
    pub epr: f64,
    pub smooth: f64,
    pub ic: f64,
    pub ss: f64,
    pub recon: bool,
    pub optimize_n: bool,
    pub coupling: bool,
}

impl RegisterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.grid_w < 2 || self.grid_h < 2 {
            return bad(format!("grid must be at least 2x2, got {}x{}", self.grid_w, self.grid_h));
        }
        if self.levels < 1 {
            return bad("pyramid levels must be at least 1".into());
        }
        for (name, v) in [
            ("step", self.step),
            ("max_step", self.max_step),
            ("min_step", self.min_step),
            ("rel_tol", self.rel_tol),
            ("fd_eps", self.fd_eps),
            ("recon_sigma", self.recon_sigma),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.max_step < self.step {
            return bad("max_step must be at least step".into());
        }
        for (name, v) in [
            ("lambda_nda", self.lambda_nda),
            ("lambda_epr", self.lambda_epr),
            ("lambda_smooth", self.lambda_smooth),
            ("lambda_ic", self.lambda_ic),
            ("lambda_ss", self.lambda_ss),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be non-negative and finite, got {v}"));
            }
        }
        self.loss.validate()
    }

    pub(crate) fn weights(&self) -> Weights {
        let t = self.toggles;
        let nda_w = if t.drop_nda { 0.0 } else { self.lambda_nda };
        let (nda, edge_l2) = if t.edge_l2_instead_of_nda { (0.0, nda_w) } else { (nda_w, 0.0) };
        Weights {
            nda,
            edge_l2,
            epr: if t.single_direction { 0.0 } else { self.lambda_epr },
            smooth: self.lambda_smooth,
            ic: if t.single_direction { 0.0 } else { self.lambda_ic },
            ss: if t.drop_coupling { 0.0 } else { self.lambda_ss },
            recon: !t.drop_recon,
            optimize_n: !t.single_direction,
            coupling: !t.drop_coupling,
        }
    }

    /// Same configuration with every toggle off.
    pub fn full(&self) -> RegisterConfig {
        RegisterConfig {
            toggles: Toggles::default(),
            ..self.clone()
        }
    }
}

/// Configuration for one ablation variant.
pub fn ablation_switches(cfg: &RegisterConfig, ablation: Ablation) -> RegisterConfig {
    let mut out = cfg.clone();
    let t = &mut out.toggles;
    match ablation {
        Ablation::Exp1 => t.edge_l2_instead_of_nda = true,
        Ablation::Exp2 => t.drop_nda = true,
        Ablation::Exp3 => t.drop_recon = true,
        Ablation::Exp4 => t.single_direction = true,
        Ablation::Exp5 => t.drop_coupling = true,
    }
    out
}
