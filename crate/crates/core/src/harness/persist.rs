//! Per-pair artifact layout:
//! `<dir>/{phi_p.bsrf, phi_n.bsrf, T_hat.pgm, V_hat.pgm, fused.pgm, trace.jsonl, report.json}`.

use std::fs;
use std::path::Path;

use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{write_atomic, load_field, load_image, save_field, save_image, DisplacementField, Image};
use crate::metrics::MetricReport;
use crate::register::RegistrationResult;

pub const PHI_P: &str = "phi_p.bsrf";
pub const PHI_N: &str = "phi_n.bsrf";
pub const T_HAT: &str = "T_hat.pgm";
pub const V_HAT: &str = "V_hat.pgm";
pub const FUSED: &str = "fused.pgm";
pub const TRACE: &str = "trace.jsonl";
pub const REPORT: &str = "report.json";

#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub phi_p: DisplacementField,
    pub phi_n: DisplacementField,
    pub t_hat: Image,
    pub v_hat: Image,
    pub fused: Option<Image>,
    pub trace: Option<String>,
    pub report: Option<MetricReport>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn save_registration(dir: &Path, result: &RegistrationResult) -> Result<()> {
    ensure_dir(dir)?;
    save_field(&result.phi_p, dir.join(PHI_P))?;
    save_field(&result.phi_n, dir.join(PHI_N))?;
    save_image(&result.t_hat, dir.join(T_HAT))?;
    save_image(&result.v_hat, dir.join(V_HAT))?;
    write_atomic(&dir.join(TRACE), result.trace_jsonl()?.as_bytes())
}

pub fn save_fused(dir: &Path, fused: &Image) -> Result<()> {
    ensure_dir(dir)?;
    save_image(fused, dir.join(FUSED))
}

pub fn save_report(path: &Path, report: &MetricReport) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn load_report(path: &Path) -> Result<MetricReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loads a pair directory; the registration files are required, the rest
/// optional. Every raster must share the field dimensions.
pub fn load_artifacts(dir: &Path) -> Result<Artifacts> {
    let phi_p = load_field(dir.join(PHI_P))?;
    let phi_n = load_field(dir.join(PHI_N))?;
    let dims = phi_p.dims();
    ensure_same_dims(dims, phi_n.dims())?;
    let t_hat = load_image(dir.join(T_HAT))?;
    let v_hat = load_image(dir.join(V_HAT))?;
    ensure_same_dims(dims, t_hat.dims())?;
    ensure_same_dims(dims, v_hat.dims())?;
    let fused_path = dir.join(FUSED);
    let fused = if fused_path.exists() {
        let f = load_image(&fused_path)?;
        ensure_same_dims(dims, f.dims())?;
        Some(f)
    } else {
        None
    };
    let trace_path = dir.join(TRACE);
    let trace = if trace_path.exists() {
        Some(fs::read_to_string(&trace_path).map_err(|e| Error::io(&trace_path, e))?)
    } else {
        None
    };
    let report_path = dir.join(REPORT);
    let report = if report_path.exists() {
        Some(load_report(&report_path)?)
    } else {
        None
    };
    Ok(Artifacts {
        phi_p,
        phi_n,
        t_hat,
        v_hat,
        fused,
        trace,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate_pair;
    use crate::register::{register_pair, RegisterConfig};

    fn pair() -> (Image, Image) {
        let t = Image::from_fn(16, 16, |x, y| ((x * 5 + y * 3) % 9 * 30) as f64 / 255.0);
        let v = t.map(|p| 1.0 - p);
        (t, v)
    }

    #[test]
    fn registration_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let (t, v) = pair();
        let cfg = RegisterConfig {
            max_iters: 0,
            levels: 1,
            ..RegisterConfig::default()
        };
        let r = register_pair(&t, &v, &cfg, 1).unwrap();
        save_registration(dir.path(), &r).unwrap();
        let a = load_artifacts(dir.path()).unwrap();
        assert_eq!(a.phi_p, r.phi_p);
        assert!(a.phi_n.dx.iter().chain(&a.phi_n.dy).all(|&d| d == 0.0));
        assert_eq!(a.t_hat, t);
        assert!(a.fused.is_none() && a.report.is_none());
        assert_eq!(a.trace.unwrap(), r.trace_jsonl().unwrap());
    }

    #[test]
    fn report_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let (t, v) = pair();
        let rep = evaluate_pair(&t, &v, &v).unwrap().labeled("p0", "registered", "shift", 5);
        let path = dir.path().join("x").join(REPORT);
        save_report(&path, &rep).unwrap();
        assert_eq!(load_report(&path).unwrap(), rep);
    }

    #[test]
    fn corrupt_field_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let (t, v) = pair();
        let cfg = RegisterConfig {
            max_iters: 0,
            levels: 1,
            ..RegisterConfig::default()
        };
        save_registration(dir.path(), &register_pair(&t, &v, &cfg, 1).unwrap()).unwrap();
        let p = dir.path().join(PHI_P);
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_artifacts(dir.path()), Err(Error::Malformed(_))));
        fs::write(&p, b"XXXX").unwrap();
        assert!(matches!(load_artifacts(dir.path()), Err(Error::Malformed(_))));
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (t, v) = pair();
        let cfg = RegisterConfig {
            max_iters: 0,
            levels: 1,
            ..RegisterConfig::default()
        };
        save_registration(dir.path(), &register_pair(&t, &v, &cfg, 1).unwrap()).unwrap();
        save_image(&Image::filled(8, 8, 0.0), dir.path().join(V_HAT)).unwrap();
        assert!(matches!(load_artifacts(dir.path()), Err(Error::DimensionMismatch { .. })));
    }
}
