use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use selfreg::harness::{corpus, synth_misalign, MisalignmentKind, MisalignmentSpec};
use selfreg::imgcore::{load_field, load_image, save_image};
use selfreg::metrics::MetricReport;

fn selfreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfreg")).args(args).output().expect("spawn selfreg")
}

fn write_pair(dir: &Path) -> (String, String) {
    let p = &corpus(1, 32, 32, 3).unwrap()[0];
    let ir = dir.join("ir.pgm");
    let vis = dir.join("vis.pgm");
    save_image(&p.ir, &ir).unwrap();
    save_image(&p.vis, &vis).unwrap();
    (ir.display().to_string(), vis.display().to_string())
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn selftest_exits_zero() {
    let out = selfreg(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(selfreg(&[]).status.code(), Some(2));
    assert_eq!(selfreg(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(selfreg(&["sweep", "--ablate", "exp9"]).status.code(), Some(2));
    assert_eq!(selfreg(&["fuse", "a.pgm", "b.pgm", "--mode", "mean"]).status.code(), Some(2));
}

#[test]
fn operational_errors_exit_one_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.pgm");
    let out = selfreg(&["synth", &s(&missing), &s(&dir.path().join("o.pgm"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(err.starts_with("error:"));

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "seed = 1\nnot_a_key = 2\n").unwrap();
    let out = selfreg(&["--config", &s(&cfg), "selftest"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));
}

#[test]
fn synth_shifts_image() {
    let dir = tempfile::tempdir().unwrap();
    let (ir, _) = write_pair(dir.path());
    let out_path = dir.path().join("shifted.pgm");
    let out = selfreg(&["synth", &ir, &s(&out_path), "--kind", "shift", "--level", "4"]);
    assert!(out.status.success());
    let expected = synth_misalign(
        &load_image(&ir).unwrap(),
        MisalignmentSpec {
            kind: MisalignmentKind::Shift,
            level: 4,
        },
    )
    .unwrap();
    assert_eq!(load_image(&out_path).unwrap(), expected);
}

#[test]
fn register_with_zero_iterations_writes_zero_fields() {
    let dir = tempfile::tempdir().unwrap();
    let (ir, vis) = write_pair(dir.path());
    let run = dir.path().join("run");
    let out = selfreg(&["register", &ir, &vis, "--iters", "0", "--out", &s(&run)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["phi_p.bsrf", "phi_n.bsrf"] {
        let field = load_field(run.join(f)).unwrap();
        assert!(field.dx.iter().chain(&field.dy).all(|&v| v == 0.0));
    }
    assert!(run.join("T_hat.pgm").exists() && run.join("trace.jsonl").exists());
}

#[test]
fn register_fuse_eval_chain() {
    let dir = tempfile::tempdir().unwrap();
    let (ir, vis) = write_pair(dir.path());
    let run = dir.path().join("run");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# quick\npyramid_levels = 1\nmax_iters = 3\n").unwrap();
    let ok = |o: Output| assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    ok(selfreg(&["--config", &s(&cfg), "register", &ir, &vis, "--out", &s(&run)]));
    let phi = s(&run.join("phi_p.bsrf"));
    ok(selfreg(&["fuse", &ir, &vis, "--field", &phi, "--out", &s(&run), "--mode", "optimize", "--config", &s(&cfg)]));
    let fused = s(&run.join("fused.pgm"));
    let out = selfreg(&["eval", &s(&run.join("T_hat.pgm")), &vis, &fused, "--out", &s(&run)]);
    assert!(out.status.success());
    let line: MetricReport = serde_json::from_str(String::from_utf8(out.stdout).unwrap().trim()).unwrap();
    let stored: MetricReport = serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(line, stored);
    assert!((0.0..=1.0).contains(&line.qabf));
}

#[test]
fn sweep_writes_csv_with_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "pairs = 2\nsweep_levels = 5,10\nsweep_kinds = shift,dilate\npyramid_levels = 1\nmax_iters = 1\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = selfreg(&["--config", &s(&cfg), "sweep", "--out", &s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("kind,level,path,Qabf,VIFF,SF,AG,MG,EI"));
    assert_eq!(lines.count(), 2 * 2 * 2);
    assert!(out_dir.join("dilate/10/pair01/fused.pgm").exists());
}
