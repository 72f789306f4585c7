//! Flat `key = value` run configuration with `#` comments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fuse::{FuseConfig, FuseMode};
use crate::imgcore::Image;
use crate::register::{ablation_switches, Ablation, RegisterConfig};

use super::misalign::MisalignmentKind;

pub const DEFAULT_SWEEP_LEVELS: [usize; 5] = [5, 10, 20, 30, 50];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Directory of `<id>_ir.pgm` / `<id>_vis.pgm` pairs; the bundled
    /// corpus when unset.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads for the sweep.
    pub workers: usize,
    /// Number of pairs taken from the input, all when unset.
    pub pairs: Option<usize>,
    pub sweep_levels: Vec<usize>,
    pub sweep_kinds: Vec<MisalignmentKind>,
    pub ablate: Option<Ablation>,
    pub register: RegisterConfig,
    pub fuse: FuseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            out: PathBuf::from("out"),
            seed: 0,
            workers: 1,
            pairs: None,
            sweep_levels: DEFAULT_SWEEP_LEVELS.to_vec(),
            sweep_kinds: vec![MisalignmentKind::Dilate],
            ablate: None,
            register: RegisterConfig::default(),
            fuse: FuseConfig::default(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("invalid value '{v}' for {key}"))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> std::result::Result<Vec<T>, String> {
    let items: std::result::Result<Vec<T>, String> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect();
    let items = items?;
    if items.is_empty() {
        return Err(format!("{key} must list at least one value"));
    }
    Ok(items)
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "input",
        "out",
        "seed",
        "workers",
        "pairs",
        "sweep_levels",
        "sweep_kinds",
        "ablate",
        "grid_w",
        "grid_h",
        "step",
        "max_step",
        "min_step",
        "max_iters",
        "rel_tol",
        "fd_eps",
        "pyramid_levels",
        "pdg_n",
        "lambda_nda",
        "lambda_epr",
        "lambda_smooth",
        "lambda_ic",
        "lambda_ss",
        "recon_sigma",
        "mu",
        "w1",
        "w2",
        "epsilon",
        "radius",
        "dec_weight",
        "intensity_weight",
        "gradient_weight",
        "fuse_mode",
        "fuse_sigma",
        "fuse_iters",
        "fuse_step",
    ];

    /// Sets one key. Errors name the problem but not the line.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let r = &mut self.register;
        match key {
            "input" => self.input = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "out" => self.out = PathBuf::from(v),
            "seed" => self.seed = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            "pairs" => self.pairs = Some(parse_num(key, v)?),
            "sweep_levels" => self.sweep_levels = parse_list(key, v)?,
            "sweep_kinds" => {
                self.sweep_kinds = v
                    .split(',')
                    .map(|s| s.trim().parse::<MisalignmentKind>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "ablate" => self.ablate = Some(v.parse::<Ablation>().map_err(|e| e.to_string())?),
            "grid_w" => r.grid_w = parse_num(key, v)?,
            "grid_h" => r.grid_h = parse_num(key, v)?,
            "step" => r.step = parse_num(key, v)?,
            "max_step" => r.max_step = parse_num(key, v)?,
            "min_step" => r.min_step = parse_num(key, v)?,
            "max_iters" => r.max_iters = parse_num(key, v)?,
            "rel_tol" => r.rel_tol = parse_num(key, v)?,
            "fd_eps" => r.fd_eps = parse_num(key, v)?,
            "pyramid_levels" => r.levels = parse_num(key, v)?,
            "pdg_n" => r.pdg_n = parse_num(key, v)?,
            "lambda_nda" => r.lambda_nda = parse_num(key, v)?,
            "lambda_epr" => r.lambda_epr = parse_num(key, v)?,
            "lambda_smooth" => r.lambda_smooth = parse_num(key, v)?,
            "lambda_ic" => r.lambda_ic = parse_num(key, v)?,
            "lambda_ss" => r.lambda_ss = parse_num(key, v)?,
            "recon_sigma" => r.recon_sigma = parse_num(key, v)?,
            "mu" => r.loss.mu = parse_num(key, v)?,
            "w1" => r.loss.w1 = parse_num(key, v)?,
            "w2" => r.loss.w2 = parse_num(key, v)?,
            "epsilon" => r.loss.epsilon = parse_num(key, v)?,
            "radius" => r.loss.radius = parse_num(key, v)?,
            "dec_weight" => r.loss.dec_weight = parse_num(key, v)?,
            "intensity_weight" => r.loss.intensity_weight = parse_num(key, v)?,
            "gradient_weight" => r.loss.gradient_weight = parse_num(key, v)?,
            "fuse_mode" => self.fuse.mode = v.parse::<FuseMode>().map_err(|e| e.to_string())?,
            "fuse_sigma" => self.fuse.sigma = parse_num(key, v)?,
            "fuse_iters" => self.fuse.iters = parse_num(key, v)?,
            "fuse_step" => self.fuse.step = parse_num(key, v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected key = value, got '{content}'"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if seen.iter().any(|s| s == k) {
                return Err(Error::Config {
                    line,
                    msg: format!("duplicate key '{k}'"),
                });
            }
            cfg.set(k, v).map_err(|msg| Error::Config { line, msg })?;
            seen.push(k.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        if self.sweep_levels.is_empty() || self.sweep_kinds.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one level and kind".into()));
        }
        self.register.validate()?;
        self.fuse.validate()
    }

    /// Registration configuration with the ablation applied.
    pub fn effective_register(&self) -> RegisterConfig {
        match self.ablate {
            Some(a) => ablation_switches(&self.register, a),
            None => self.register.clone(),
        }
    }

    /// Canonical text form; parses back to an equal configuration.
    pub fn to_text(&self) -> String {
        let r = &self.register;
        let l = &r.loss;
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("input", self.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        kv("out", self.out.display().to_string());
        kv("seed", self.seed.to_string());
        kv("workers", self.workers.to_string());
        if let Some(p) = self.pairs {
            kv("pairs", p.to_string());
        }
        kv("sweep_levels", join(self.sweep_levels.iter().map(|l| l.to_string()).collect()));
        kv("sweep_kinds", join(self.sweep_kinds.iter().map(|k| k.to_string()).collect()));
        if let Some(a) = self.ablate {
            kv("ablate", a.to_string());
        }
        kv("grid_w", r.grid_w.to_string());
        kv("grid_h", r.grid_h.to_string());
        kv("step", format!("{:?}", r.step));
        kv("max_step", format!("{:?}", r.max_step));
        kv("min_step", format!("{:?}", r.min_step));
        kv("max_iters", r.max_iters.to_string());
        kv("rel_tol", format!("{:?}", r.rel_tol));
        kv("fd_eps", format!("{:?}", r.fd_eps));
        kv("pyramid_levels", r.levels.to_string());
        kv("pdg_n", r.pdg_n.to_string());
        kv("lambda_nda", format!("{:?}", r.lambda_nda));
        kv("lambda_epr", format!("{:?}", r.lambda_epr));
        kv("lambda_smooth", format!("{:?}", r.lambda_smooth));
        kv("lambda_ic", format!("{:?}", r.lambda_ic));
        kv("lambda_ss", format!("{:?}", r.lambda_ss));
        kv("recon_sigma", format!("{:?}", r.recon_sigma));
        kv("mu", format!("{:?}", l.mu));
        kv("w1", format!("{:?}", l.w1));
        kv("w2", format!("{:?}", l.w2));
        kv("epsilon", format!("{:?}", l.epsilon));
        kv("radius", l.radius.to_string());
        kv("dec_weight", format!("{:?}", l.dec_weight));
        kv("intensity_weight", format!("{:?}", l.intensity_weight));
        kv("gradient_weight", format!("{:?}", l.gradient_weight));
        kv("fuse_mode", self.fuse.mode.to_string());
        kv("fuse_sigma", format!("{:?}", self.fuse.sigma));
        kv("fuse_iters", self.fuse.iters.to_string());
        kv("fuse_step", format!("{:?}", self.fuse.step));
        s
    }

    /// Side length multiple the pipeline needs: two proxy patches per side
    /// at the coarsest pyramid level.
    pub fn size_multiple(&self) -> usize {
        2 * self.register.pdg_n.max(1) as usize * (1usize << (self.register.levels - 1))
    }
}

/// Center crop to the largest size that is a multiple of `multiple`.
pub fn crop_to_multiple(img: &Image, multiple: usize) -> Result<Image> {
    let (w, h) = img.dims();
    let (cw, ch) = (w / multiple * multiple, h / multiple * multiple);
    if cw == 0 || ch == 0 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: multiple,
            min_height: multiple,
        });
    }
    if (cw, ch) == (w, h) {
        return Ok(img.clone());
    }
    img.center_crop(cw, ch)
}
