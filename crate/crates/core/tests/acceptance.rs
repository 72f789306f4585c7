//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line
//! straight to the process stderr (bypassing the harness capture) before
//! asserting, so `cargo test --test acceptance` shows every verdict.

mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfreg::harness::sweep::{CSV_HEADER, REGISTERED, UNREGISTERED};
use selfreg::harness::{bundled_corpus, run_sweep, synth_misalign, MisalignmentKind, MisalignmentSpec, RunConfig};
use selfreg::imgcore::{warp, DisplacementField, Image};
use selfreg::losses::{
    correlation, effective_edges, epr_loss, fusion_loss, nda_loss, recf_loss, recp_loss, smooth_loss, ss_loss, ssim,
    BranchView, FeaturePair, LossConfig,
};
use selfreg::metrics::{ag, ei, mg, qabf, sf, viff};
use selfreg::proxy::{ipdg_field, ipdg_image, pdg_apply, pdg_field_apply, pdg_sample_with};
use selfreg::register::{
    ablation_switches, fd_gradient, mean_dx_over, register_pair, total_intra_objective, Ablation, RegisterConfig,
};

/// Serializes the registration-heavy criteria so the timed one is not
/// sharing the CPU with the others.
fn heavy() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: u32, name: &str, ok: bool, detail: &str) {
    let line = format!("{} {id} {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

/// Collects sub-check failures so a criterion reports every miss at once.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failed.push(what.into());
        }
    }

    fn close(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        self.check(ok, format!("{what}: got {got}, want {want} +- {tol}"));
    }

    fn finish(self, id: u32, name: &str, ok_detail: &str) {
        let ok = self.failed.is_empty();
        let detail = if ok { ok_detail.to_string() } else { self.failed.join("; ") };
        verdict(id, name, ok, &detail);
        assert!(ok, "{detail}");
    }
}

#[test]
fn criterion_1_proxy_round_trips_are_exact() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checks = Checks::default();
    for case in 0..1000 {
        let n = [0, 1, 2, 4][case % 4];
        let k = (n as usize).max(1);
        let w = k * rng.gen_range(1..=64 / k);
        let h = k * rng.gen_range(1..=64 / k);
        let img = Image::from_fn(w, h, |_, _| rng.gen());
        let field = DisplacementField::from_fn(w, h, |_, _| (rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)));
        let t = pdg_sample_with(&mut rng, w, h, n);
        let img_back = ipdg_image(&pdg_apply(&img, &t).unwrap(), &t).unwrap();
        let field_back = ipdg_field(&pdg_field_apply(&field, &t).unwrap(), &t).unwrap();
        checks.check(img_back == img, format!("image case {case} (n = {n}, {w}x{h})"));
        checks.check(field_back == field, format!("field case {case} (n = {n}, {w}x{h})"));
    }
    let elapsed = start.elapsed();
    checks.check(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"));
    checks.finish(1, "proxy round trips", &format!("1000 transcripts bitwise exact in {elapsed:.2?}"));
}

#[test]
fn criterion_2_global_ops_commute_with_warping() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checks = Checks::default();
    for case in 0..100 {
        let (w, h) = (rng.gen_range(2..=40), rng.gen_range(2..=40));
        let img = Image::from_fn(w, h, |_, _| rng.gen());
        // eighth-pixel lattice: bilinear weights and their flips are exact
        let field = DisplacementField::from_fn(w, h, |_, _| {
            (rng.gen_range(-40i32..=40) as f64 / 8.0, rng.gen_range(-40i32..=40) as f64 / 8.0)
        });
        let t = pdg_sample_with(&mut rng, w, h, 0);
        let lhs = warp(&pdg_apply(&img, &t).unwrap(), &pdg_field_apply(&field, &t).unwrap()).unwrap();
        let rhs = pdg_apply(&warp(&img, &field).unwrap(), &t).unwrap();
        checks.check(lhs == rhs, format!("case {case} ({w}x{h}, {:?})", t.ops[0]));
    }
    checks.finish(2, "warp equivariance", "100 global-op cases bitwise equal");
}

fn step(w: usize, h: usize, at: usize) -> Image {
    Image::from_fn(w, h, |x, _| if x >= at { 1.0 } else { 0.0 })
}

/// Brute-force nearest-edge matching straight from the definition: for each
/// source edge pixel, scan the whole window and keep the closest partner.
fn nda_distance_oracle(t: &Image, v: &Image, a: &Image, radius: isize, mu: f64) -> f64 {
    let (w, h) = t.dims();
    let mag = |img: &Image, x: usize, y: usize| {
        let (gx, gy) = sobel_ref(img, x, y);
        gx.hypot(gy)
    };
    let nearest = |img: &Image, x: usize, y: usize| {
        let mut best: Option<f64> = None;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let (cx, cy) = (x as isize + dx, y as isize + dy);
                if cx < 0 || cy < 0 || cx >= w as isize || cy >= h as isize {
                    continue;
                }
                if mag(img, cx as usize, cy as usize) > mu {
                    let d = ((dx * dx + dy * dy) as f64).sqrt();
                    best = Some(best.map_or(d, |b: f64| b.min(d)));
                }
            }
        }
        best
    };
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            if mag(t, x, y) <= mu {
                continue;
            }
            if let (Some(p1), Some(p2)) = (nearest(v, x, y), nearest(a, x, y)) {
                sum += (p1 - p2).powi(2);
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// Single-window SSIM on an 11x11 image, straight from the definition.
fn ssim_window_oracle(a: &Image, b: &Image) -> f64 {
    let g: Vec<f64> = (0..11).map(|i| (-((i as f64 - 5.0).powi(2)) / (2.0 * 1.5 * 1.5)).exp()).collect();
    let norm: f64 = g.iter().sum::<f64>().powi(2);
    let weight = |x: usize, y: usize| g[x] * g[y] / norm;
    let (mut ma, mut mb) = (0.0, 0.0);
    for y in 0..11 {
        for x in 0..11 {
            ma += weight(x, y) * a.get(x, y);
            mb += weight(x, y) * b.get(x, y);
        }
    }
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for y in 0..11 {
        for x in 0..11 {
            va += weight(x, y) * (a.get(x, y) - ma).powi(2);
            vb += weight(x, y) * (b.get(x, y) - mb).powi(2);
            cov += weight(x, y) * (a.get(x, y) - ma) * (b.get(x, y) - mb);
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
}

/// Gradient of the smoothness loss over `[dx..., dy...]`, differentiated by hand.
fn smooth_gradient_oracle(f: &DisplacementField) -> Vec<f64> {
    let (w, h) = f.dims();
    let (nx, ny) = (((w - 1) * h) as f64, (w * (h - 1)) as f64);
    let mut g = vec![0.0; 2 * w * h];
    for (plane, vals) in [&f.dx, &f.dy].into_iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w {
                    let d = vals[i + 1] - vals[i];
                    g[plane * w * h + i + 1] += 2.0 * d / nx;
                    g[plane * w * h + i] -= 2.0 * d / nx;
                }
                if y + 1 < h {
                    let d = vals[i + w] - vals[i];
                    g[plane * w * h + i + w] += 2.0 * d / ny;
                    g[plane * w * h + i] -= 2.0 * d / ny;
                }
            }
        }
    }
    g
}

#[test]
fn criterion_3_loss_examples_and_gradient() {
    const ABS: f64 = 1e-6;
    const EXACT: f64 = 1e-9;
    let cfg = LossConfig::default();
    let mut c = Checks::default();
    let textured_img = textured(24, 20);

    // effective edges
    c.check(effective_edges(&Image::filled(9, 9, 0.4), cfg.mu).unwrap().is_empty(), "constant image has edges");
    let cols: std::collections::BTreeSet<usize> =
        effective_edges(&step(12, 6, 6), cfg.mu).unwrap().pixels.iter().map(|p| p.x).collect();
    c.check(cols == [5, 6].into(), format!("step edge columns {cols:?}"));
    c.check(effective_edges(&textured_img, 1e9).unwrap().is_empty(), "huge threshold leaves edges");

    // neighborhood alignment
    let s = step(24, 12, 10);
    c.close("nda aligned", nda_loss(&s, &s, &s, &cfg).unwrap().total(), 0.0, EXACT);
    let shifted = step(24, 12, 12);
    let nda = nda_loss(&s, &shifted, &s, &cfg).unwrap();
    // Sobel marks columns 9, 10 (source) and 11, 12 (shifted): matched
    // distances 2 and 1 against 0, so (4 + 1) / 2
    let oracle = nda_distance_oracle(&s, &shifted, &s, 7, cfg.mu);
    c.close("nda step oracle", oracle, 2.5, EXACT);
    c.close("nda step distance", nda.distance, oracle, EXACT);
    c.close("nda step angle", nda.angle, 0.0, EXACT);
    let flat = Image::filled(10, 10, 0.3);
    c.close("nda constant", nda_loss(&flat, &flat, &flat, &cfg).unwrap().total(), 0.0, EXACT);

    // edge pixel retention
    let (t, v, a) = (textured(10, 10), textured(10, 10).map(|x| 1.0 - x), textured(10, 10).map(|x| x * x));
    c.close("epr unaligned", epr_loss(&t, &v, &t).unwrap(), 0.0, EXACT);
    let zero = Image::filled(6, 6, 0.0);
    c.close("epr constant", epr_loss(&zero, &zero, &Image::filled(6, 6, 0.5)).unwrap(), 0.25, EXACT);
    let lift = |i: &Image| i.map(|x| x + 0.3);
    c.close(
        "epr offset",
        epr_loss(&lift(&t), &lift(&v), &lift(&a)).unwrap(),
        epr_loss(&t, &v, &a).unwrap(),
        EXACT,
    );

    // branch consistency on 1x1 rasters
    let (px0, px1) = (Image::filled(1, 1, 0.2), Image::filled(1, 1, 0.3));
    let f0 = DisplacementField::zeros(1, 1);
    fn branch<'a>(th: &'a Image, rest: &'a Image, f: &'a DisplacementField) -> BranchView<'a> {
        BranchView {
            t_hat: th,
            v_hat: rest,
            recon_t: rest,
            recon_v: rest,
            phi_p: f,
            phi_n: f,
        }
    }
    let view = |th| branch(th, &px0, &f0);
    c.close("ss identical", ss_loss(&view(&px0), &view(&px0), &cfg).unwrap(), 0.0, EXACT);
    let one_pair = ss_loss(&view(&px0), &view(&px1), &cfg).unwrap();
    c.close("ss one pair", one_pair, 0.51, EXACT);
    let doubled = LossConfig {
        w1: 2.0 * cfg.w1,
        w2: 2.0 * cfg.w2,
        ..cfg.clone()
    };
    c.close("ss doubled", ss_loss(&view(&px0), &view(&px1), &doubled).unwrap(), 2.0 * one_pair, EXACT);

    // smoothness
    c.close("smooth constant", smooth_loss(&DisplacementField::constant(7, 5, 1.5, -2.0)).unwrap(), 0.0, EXACT);
    let ramp = DisplacementField::from_fn(7, 5, |x, _| (x as f64, 0.0));
    // 6 * 5 unit x-differences over 6 * 5 pairs, no y-differences
    c.close("smooth ramp", smooth_loss(&ramp).unwrap(), 1.0, EXACT);
    let wavy = DisplacementField::from_fn(7, 5, |x, y| ((x * y) as f64 * 0.3, (x as f64 - y as f64).sin()));
    c.close("smooth scaling", smooth_loss(&wavy.scaled(3.0)).unwrap(), 9.0 * smooth_loss(&wavy).unwrap(), EXACT);

    // structural similarity
    let tex = textured(16, 16);
    c.close("ssim self", ssim(&tex, &tex).unwrap(), 1.0, EXACT);
    c.close("recp self", recp_loss(&tex, &tex).unwrap(), 0.0, EXACT);
    let board = Image::from_fn(11, 11, |x, y| ((x + y) % 2) as f64);
    let inverse = board.map(|x| 1.0 - x);
    let s_ref = ssim_window_oracle(&board, &inverse);
    c.check(s_ref < 0.0, format!("checkerboard oracle {s_ref} not negative"));
    c.close("ssim checkerboard", ssim(&board, &inverse).unwrap(), s_ref, ABS);
    c.check(recp_loss(&board, &inverse).unwrap() >= 0.0, "recp negative");

    // correlation and feature loss
    c.close("cc self", correlation(&tex, &tex).unwrap(), 1.0, EXACT);
    c.close("cc inverse", correlation(&tex, &tex.map(|x| 1.0 - x)).unwrap(), -1.0, EXACT);
    c.close("recf identical", recf_loss(&tex, &tex, &tex, &tex, 1.01).unwrap(), 1.0 / 2.01, EXACT);

    // fusion objective
    let features = |a: &Image, b: &Image| FeaturePair {
        global_t: a.clone(),
        global_v: b.clone(),
        local_t: a.clone(),
        local_v: b.clone(),
    };
    let same = fusion_loss(&tex, &tex, &tex, &features(&tex, &tex), &cfg).unwrap();
    c.close("fusion same intensity", same.intensity, 0.0, EXACT);
    c.close("fusion same gradient", same.gradient, 0.0, EXACT);
    c.close("fusion same total", same.total, same.dec, EXACT);
    let (lo, hi) = (Image::filled(8, 8, 0.0), Image::filled(8, 8, 1.0));
    let up = fusion_loss(&hi, &lo, &hi, &features(&lo, &hi), &cfg).unwrap();
    c.close("fusion max intensity", up.intensity, 0.0, EXACT);
    c.close("fusion max gradient", up.gradient, 0.0, EXACT);
    let down = fusion_loss(&lo, &lo, &hi, &features(&lo, &hi), &cfg).unwrap();
    c.close("fusion min intensity", down.intensity, 1.0, EXACT);

    // finite differences against the hand gradient
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (w, h) = (6, 5);
    let field = DisplacementField::from_fn(w, h, |_, _| (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
    let params: Vec<f64> = field.dx.iter().chain(&field.dy).copied().collect();
    let fd = fd_gradient(
        |p| {
            let f = DisplacementField::new(w, h, p[..w * h].to_vec(), p[w * h..].to_vec())?;
            smooth_loss(&f)
        },
        &params,
        1e-3,
    )
    .unwrap();
    let exact = smooth_gradient_oracle(&field);
    let scale = exact.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let worst = fd.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    c.check(worst <= 1e-6, format!("smooth gradient relative error {worst:e}"));

    c.finish(3, "loss analytic suite", &format!("all examples hold; smooth gradient rel err {worst:.1e}"));
}

const SHIFT: MisalignmentSpec = MisalignmentSpec {
    kind: MisalignmentKind::Shift,
    level: 5,
};

/// Per-pair outcome of registering a shifted corpus pair.
struct ShiftRun {
    mean_dx: f64,
    objective: f64,
}

fn shift_runs(cfg: &RegisterConfig, full: &RegisterConfig) -> Vec<ShiftRun> {
    let seed = RunConfig::default().seed;
    bundled_corpus()
        .unwrap()
        .iter()
        .map(|p| {
            let t = synth_misalign(&p.ir, SHIFT).unwrap();
            let r = register_pair(&t, &p.vis, cfg, seed).unwrap();
            let edges = effective_edges(&p.vis, full.loss.mu).unwrap();
            ShiftRun {
                mean_dx: mean_dx_over(&r.phi_p, edges.pixels.iter().map(|e| (e.x, e.y))).unwrap_or(0.0),
                objective: total_intra_objective(&t, &p.vis, &r, full).unwrap(),
            }
        })
        .collect()
}

fn recovered(runs: &[ShiftRun]) -> usize {
    runs.iter().filter(|r| (4.0..=6.0).contains(&r.mean_dx)).count()
}

/// Full-configuration shift runs shared by the recovery and ablation criteria.
fn full_runs() -> &'static (Vec<ShiftRun>, Duration) {
    static RUNS: OnceLock<(Vec<ShiftRun>, Duration)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let full = RegisterConfig::default();
        let start = Instant::now();
        let runs = shift_runs(&full, &full);
        (runs, start.elapsed())
    })
}

#[test]
fn criterion_4_shift_recovery() {
    let _guard = heavy();
    let (runs, elapsed) = full_runs();
    let ok = recovered(runs);
    let dx: Vec<String> = runs.iter().map(|r| format!("{:.2}", r.mean_dx)).collect();
    let mut c = Checks::default();
    c.check(runs.len() == 10, format!("{} pairs", runs.len()));
    c.check(ok >= 8, format!("{ok}/10 pairs in [4, 6] px (mean dx {})", dx.join(", ")));
    c.check(*elapsed < Duration::from_secs(300), format!("took {elapsed:.1?}"));
    c.finish(
        4,
        "shift recovery",
        &format!("{ok}/10 pairs in [4, 6] px in {elapsed:.1?} (mean dx {})", dx.join(", ")),
    );
}

#[test]
fn criterion_5_dilation_sweep_ordering() {
    let _guard = heavy();
    let cfg = RunConfig {
        sweep_kinds: vec![MisalignmentKind::Dilate],
        ..RunConfig::default()
    };
    let out = tempfile::tempdir().unwrap();
    let pairs = bundled_corpus().unwrap();
    let sweep = run_sweep(&cfg, &pairs, Some(out.path())).unwrap();
    let mut c = Checks::default();
    let csv = fs::read_to_string(out.path().join("sweep.csv")).unwrap_or_default();
    c.check(csv.starts_with(&format!("{}\n", CSV_HEADER.join(","))), "sweep.csv missing or malformed");
    let mut summary = Vec::new();
    for &level in &[5, 10, 20, 30, 50] {
        let reg = sweep.row(MisalignmentKind::Dilate, level, REGISTERED);
        let unreg = sweep.row(MisalignmentKind::Dilate, level, UNREGISTERED);
        match (reg, unreg) {
            (Some(r), Some(u)) => {
                let (qr, qu) = (r.means[0], u.means[0]);
                summary.push(format!("{level}: {qr:.4} vs {qu:.4}"));
                c.check(r.pairs == pairs.len(), format!("level {level} averaged {} pairs", r.pairs));
                c.check(qr >= qu, format!("level {level}: registered Qabf {qr:.4} < unregistered {qu:.4}"));
            }
            _ => c.check(false, format!("level {level} rows missing")),
        }
    }
    c.finish(5, "dilation sweep ordering", &format!("Qabf registered vs unregistered, {}", summary.join("; ")));
}

#[test]
fn criterion_6_ablation_ordering() {
    let _guard = heavy();
    let full = RegisterConfig::default();
    let (full_runs, _) = full_runs();
    let full_sum: f64 = full_runs.iter().map(|r| r.objective).sum();
    let full_ok = recovered(full_runs);
    let mut c = Checks::default();
    let mut summary = vec![format!("full {full_sum:.4} ({full_ok}/10)")];
    for ablation in Ablation::ALL {
        let runs = shift_runs(&ablation_switches(&full, ablation), &full);
        let sum: f64 = runs.iter().map(|r| r.objective).sum();
        let ok = recovered(&runs);
        summary.push(format!("{ablation} {sum:.4} ({ok}/10)"));
        c.check(full_sum <= sum, format!("full objective {full_sum:.4} > {ablation} {sum:.4}"));
        if ablation == Ablation::Exp2 {
            c.check(ok < full_ok, format!("exp2 recovered {ok}/10, full {full_ok}/10"));
        }
    }
    let summary = summary.join(", ");
    if !c.failed.is_empty() {
        c.failed.push(format!("objectives {summary}"));
    }
    c.finish(6, "ablation ordering", &summary);
}

#[test]
fn criterion_7_metric_oracles() {
    const TOL: f64 = 1e-9;
    let mut c = Checks::default();
    let rel = |got: f64, want: f64| (got - want).abs() <= TOL * want.abs().max(1.0);
    for seed in 0..50 {
        let (a, b, f) = random_triple(1000 + seed, 16, 16);
        let pairs = [
            ("Qabf", qabf(&a, &b, &f).unwrap(), qabf_ref(&a, &b, &f)),
            ("VIFF", viff(&a, &b, &f).unwrap(), viff_ref(&a, &b, &f)),
            ("SF", sf(&f).unwrap(), sf_ref(&f)),
            ("AG", ag(&f).unwrap(), ag_ref(&f)),
            ("MG", mg(&f).unwrap(), mg_ref(&f)),
            ("EI", ei(&f).unwrap(), ei_ref(&f)),
        ];
        for (name, got, want) in pairs {
            c.check(rel(got, want), format!("{name} triple {seed}: {got} vs {want}"));
        }
    }
    let a = textured(48, 48);
    let q = qabf(&a, &a, &a).unwrap();
    let v = viff(&a, &a, &a).unwrap();
    c.check(q >= 0.98, format!("qabf(A, A, A) = {q:.5} < 0.98"));
    c.check((v - 1.0).abs() <= 1e-6, format!("viff(A, A, A) = {v}"));
    c.finish(7, "metric oracles", &format!("50 triples within 1e-9, qabf(A,A,A) = {q:.5}, viff(A,A,A) = {v}"));
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_8_sweeps_are_deterministic() {
    let _guard = heavy();
    let mut cfg = RunConfig::default();
    for (k, v) in [
        ("pairs", "3"),
        ("workers", "3"),
        ("seed", "11"),
        ("sweep_levels", "5,20"),
        ("sweep_kinds", "shift,dilate"),
        ("max_iters", "4"),
        ("fuse_mode", "optimize"),
        ("fuse_iters", "5"),
    ] {
        cfg.set(k, v).unwrap();
    }
    let pairs = bundled_corpus().unwrap();
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            run_sweep(&cfg, &pairs[..3], Some(dir.path())).unwrap();
            (tree(dir.path()), dir)
        })
        .collect();
    let (first, second) = (&runs[0].0, &runs[1].0);
    let mut c = Checks::default();
    c.check(first.len() > 3 * 2 * 2, format!("only {} files written", first.len()));
    c.check(
        first.iter().map(|e| &e.0).eq(second.iter().map(|e| &e.0)),
        "file lists differ",
    );
    for ((name, a), (_, b)) in first.iter().zip(second) {
        c.check(a == b, format!("{name} differs"));
    }
    c.finish(8, "sweep determinism", &format!("{} files byte-identical across two runs", first.len()));
}
