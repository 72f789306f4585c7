//! Misalign, register, fuse and evaluate each pair at each level, for both
//! the registered path and the unregistered max-fusion baseline.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fuse::{fuse, fuse_max};
use crate::imgcore::{load_image, write_atomic, Image};
use crate::metrics::{evaluate_pair, MetricReport};
use crate::register::register_pair;

use super::config::{crop_to_multiple, RunConfig};
use super::corpus::{bundled_corpus, ScenePair};
use super::misalign::{synth_misalign, MisalignmentKind, MisalignmentSpec};
use super::persist::{save_fused, save_registration, save_report, REPORT};

pub const CSV_HEADER: [&str; 9] = ["kind", "level", "path", "Qabf", "VIFF", "SF", "AG", "MG", "EI"];
pub const REGISTERED: &str = "registered";
pub const UNREGISTERED: &str = "unregistered";

/// Pairs named `<id>_ir.pgm` with a matching `<id>_vis.pgm`, sorted by id.
pub fn load_pair_dir(dir: &Path) -> Result<Vec<ScenePair>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix("_ir.pgm") {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    if ids.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no <id>_ir.pgm files in {}",
            dir.display()
        )));
    }
    ids.into_iter()
        .map(|id| {
            let ir = load_image(dir.join(format!("{id}_ir.pgm")))?;
            let vis = load_image(dir.join(format!("{id}_vis.pgm")))?;
            Ok(ScenePair { id, ir, vis })
        })
        .collect()
}

/// Input pairs of a run, cropped to the pipeline size multiple.
pub fn input_pairs(cfg: &RunConfig) -> Result<Vec<ScenePair>> {
    let mut pairs = match &cfg.input {
        Some(dir) => load_pair_dir(dir)?,
        None => bundled_corpus()?,
    };
    if let Some(n) = cfg.pairs {
        pairs.truncate(n);
    }
    let m = cfg.size_multiple();
    pairs
        .into_iter()
        .map(|p| {
            Ok(ScenePair {
                ir: crop_to_multiple(&p.ir, m)?,
                vis: crop_to_multiple(&p.vis, m)?,
                id: p.id,
            })
        })
        .collect()
}

/// Registered and unregistered reports for one misaligned pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub registered: MetricReport,
    pub unregistered: MetricReport,
}

/// Runs one pair through the pipeline, writing its artifacts under `dir`
/// when given.
pub fn run_pair(pair: &ScenePair, spec: MisalignmentSpec, cfg: &RunConfig, dir: Option<&Path>) -> Result<PairOutcome> {
    let kind = spec.kind.name();
    let t = synth_misalign(&pair.ir, spec)?;
    let reg = register_pair(&t, &pair.vis, &cfg.effective_register(), cfg.seed)?;
    let fused = fuse(&reg.t_hat, &pair.vis, &cfg.fuse)?;
    let registered = evaluate_pair(&reg.t_hat, &pair.vis, &fused)?.labeled(&pair.id, REGISTERED, kind, spec.level);
    let baseline = fuse_max(&t, &pair.vis)?;
    let unregistered = evaluate_pair(&t, &pair.vis, &baseline)?.labeled(&pair.id, UNREGISTERED, kind, spec.level);
    if let Some(dir) = dir {
        save_registration(dir, &reg)?;
        save_fused(dir, &fused)?;
        save_report(&dir.join(REPORT), &registered)?;
        save_report(&dir.join("unregistered.json"), &unregistered)?;
    }
    Ok(PairOutcome { registered, unregistered })
}

/// Mean metrics of one (kind, level, path) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: MisalignmentKind,
    pub level: usize,
    pub path: &'static str,
    pub pairs: usize,
    /// Qabf, VIFF, SF, AG, MG, EI.
    pub means: [f64; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<MetricReport>,
}

impl SweepOutcome {
    pub fn row(&self, kind: MisalignmentKind, level: usize, path: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.kind == kind && r.level == level && r.path == path)
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let mut rec = vec![r.kind.to_string(), r.level.to_string(), r.path.to_string()];
        rec.extend(r.means.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Malformed(e.to_string()))
}

fn mean_row(kind: MisalignmentKind, level: usize, path: &'static str, reports: &[&MetricReport]) -> SweepRow {
    let mut means = [0.0; 6];
    for r in reports {
        for (m, v) in means.iter_mut().zip(r.values()) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= reports.len().max(1) as f64;
    }
    SweepRow {
        kind,
        level,
        path,
        pairs: reports.len(),
        means,
    }
}

/// Full sweep over `cfg.sweep_kinds x cfg.sweep_levels x pairs`. With an
/// output directory it writes `sweep.csv`, `reports.jsonl`, `config.txt`
/// and `<kind>/<level>/<pair_id>/` artifacts.
pub fn run_sweep(cfg: &RunConfig, pairs: &[ScenePair], out: Option<&Path>) -> Result<SweepOutcome> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for &kind in &cfg.sweep_kinds {
        for &level in &cfg.sweep_levels {
            let spec = MisalignmentSpec { kind, level };
            for p in pairs {
                spec.validate(p.ir.width(), p.ir.height())?;
                tasks.push((spec, p));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let outcomes: Vec<PairOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(spec, p)| {
                let dir: Option<PathBuf> = out.map(|o| o.join(spec.kind.name()).join(spec.level.to_string()).join(&p.id));
                run_pair(p, *spec, cfg, dir.as_deref())
            })
            .collect::<Result<_>>()
    })?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let per_cell = pairs.len();
    for (cell, chunk) in outcomes.chunks(per_cell.max(1)).enumerate() {
        if per_cell == 0 {
            break;
        }
        let spec = tasks[cell * per_cell].0;
        let reg: Vec<&MetricReport> = chunk.iter().map(|o| &o.registered).collect();
        let unreg: Vec<&MetricReport> = chunk.iter().map(|o| &o.unregistered).collect();
        rows.push(mean_row(spec.kind, spec.level, REGISTERED, &reg));
        rows.push(mean_row(spec.kind, spec.level, UNREGISTERED, &unreg));
        for o in chunk {
            reports.push(o.registered.clone());
            reports.push(o.unregistered.clone());
        }
    }
    let outcome = SweepOutcome { rows, reports };
    if let Some(out) = out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        write_atomic(&out.join("sweep.csv"), sweep_csv(&outcome.rows)?.as_bytes())?;
        let mut jsonl = String::new();
        for r in &outcome.reports {
            jsonl.push_str(&r.to_json_line()?);
            jsonl.push('\n');
        }
        write_atomic(&out.join("reports.jsonl"), jsonl.as_bytes())?;
        write_atomic(&out.join("config.txt"), cfg.to_text().as_bytes())?;
    }
    Ok(outcome)
}

/// Synthetic misaligned input written next to its visible partner, in the
/// layout `load_pair_dir` reads.
pub fn write_pair(dir: &Path, id: &str, ir: &Image, vis: &Image) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    crate::imgcore::save_image(ir, dir.join(format!("{id}_ir.pgm")))?;
    crate::imgcore::save_image(vis, dir.join(format!("{id}_vis.pgm")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::corpus::corpus;

    fn tiny_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.register.levels = 1;
        cfg.register.max_iters = 2;
        cfg.sweep_levels = vec![2, 3];
        cfg.sweep_kinds = MisalignmentKind::ALL.to_vec();
        cfg
    }

    #[test]
    fn row_count_and_header() {
        let pairs = corpus(2, 32, 32, 5).unwrap();
        let out = run_sweep(&tiny_cfg(), &pairs, None).unwrap();
        assert_eq!(out.rows.len(), 2 * 2 * 2);
        assert_eq!(out.reports.len(), 2 * 2 * 2 * 2);
        let csv = sweep_csv(&out.rows).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "kind,level,path,Qabf,VIFF,SF,AG,MG,EI");
        assert_eq!(csv.lines().count(), 9);
        assert!(out.row(MisalignmentKind::Dilate, 3, UNREGISTERED).is_some());
    }

    #[test]
    fn pair_dir_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let pairs = corpus(2, 32, 32, 5).unwrap();
        for p in &pairs {
            write_pair(dir.path(), &p.id, &p.ir, &p.vis).unwrap();
        }
        let back = load_pair_dir(dir.path()).unwrap();
        assert_eq!(back, pairs);
        let empty = tempfile::tempdir().unwrap();
        assert!(load_pair_dir(empty.path()).is_err());
    }

    #[test]
    fn writes_output_tree() {
        let dir = tempfile::tempdir().unwrap();
        let pairs = corpus(1, 32, 32, 5).unwrap();
        let mut cfg = tiny_cfg();
        cfg.sweep_kinds = vec![MisalignmentKind::Shift];
        cfg.sweep_levels = vec![2];
        run_sweep(&cfg, &pairs, Some(dir.path())).unwrap();
        for f in ["sweep.csv", "reports.jsonl", "config.txt", "shift/2/pair00/report.json", "shift/2/pair00/phi_p.bsrf"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }
}
