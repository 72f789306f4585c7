use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use selfreg::fuse::{fuse, FuseMode};
use selfreg::harness::persist::REPORT;
use selfreg::harness::{
    input_pairs, run_selftest, run_sweep, save_fused, save_registration, save_report, synth_misalign, MisalignmentKind,
    MisalignmentSpec, RunConfig,
};
use selfreg::imgcore::{load_field, load_image, save_image, warp};
use selfreg::metrics::evaluate_pair;
use selfreg::register::{register_pair, Ablation};

/// Self-supervised bi-directional registration and fusion of infrared/visible pairs
#[derive(Parser, Debug)]
#[command(name = "selfreg", version, about)]
struct Cli {
    /// Run configuration (flat key = value); flags override it
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Iteration cap per pyramid level
    #[arg(long, global = true)]
    iters: Option<usize>,

    /// Fusion mode: max or optimize
    #[arg(long, global = true)]
    mode: Option<FuseMode>,

    /// Ablation variant: exp1..exp5
    #[arg(long, global = true)]
    ablate: Option<Ablation>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Misalign an image
    Synth {
        input: PathBuf,
        output: PathBuf,
        /// shift or dilate
        #[arg(long, default_value = "shift")]
        kind: MisalignmentKind,
        #[arg(long, default_value_t = 5)]
        level: usize,
    },
    /// Register an infrared image to a visible one and write the fields and warped images
    Register { ir: PathBuf, vis: PathBuf },
    /// Fuse an infrared image (warped by --field when given) with a visible one
    Fuse {
        ir: PathBuf,
        vis: PathBuf,
        /// Forward field from a registration run
        #[arg(long, value_name = "PATH")]
        field: Option<PathBuf>,
    },
    /// Score a fused image against its sources; prints one JSON line
    Eval { ir: PathBuf, vis: PathBuf, fused: PathBuf },
    /// Misalign, register, fuse and evaluate the corpus at every configured level
    Sweep {
        /// Restrict to one misalignment kind
        #[arg(long)]
        kind: Option<MisalignmentKind>,
        /// Restrict to one level
        #[arg(long)]
        level: Option<usize>,
    },
    /// Run the built-in analytic checks
    Selftest,
}

fn run_config(cli: &Cli) -> selfreg::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(i) = cli.iters {
        cfg.register.max_iters = i;
    }
    if let Some(m) = cli.mode {
        cfg.fuse.mode = m;
    }
    if let Some(a) = cli.ablate {
        cfg.ablate = Some(a);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> selfreg::Result<bool> {
    let cfg = run_config(cli)?;
    match &cli.command {
        Command::Synth {
            input,
            output,
            kind,
            level,
        } => {
            let img = load_image(input)?;
            let out = synth_misalign(&img, MisalignmentSpec { kind: *kind, level: *level })?;
            save_image(&out, output)?;
        }
        Command::Register { ir, vis } => {
            let t = load_image(ir)?;
            let v = load_image(vis)?;
            let r = register_pair(&t, &v, &cfg.effective_register(), cfg.seed)?;
            save_registration(&cfg.out, &r)?;
        }
        Command::Fuse { ir, vis, field } => {
            let mut t = load_image(ir)?;
            let v = load_image(vis)?;
            if let Some(f) = field {
                t = warp(&t, &load_field(f)?)?;
            }
            save_fused(&cfg.out, &fuse(&t, &v, &cfg.fuse)?)?;
        }
        Command::Eval { ir, vis, fused } => {
            let report = evaluate_pair(&load_image(ir)?, &load_image(vis)?, &load_image(fused)?)?;
            if cli.out.is_some() {
                save_report(&cfg.out.join(REPORT), &report)?;
            }
            println!("{}", report.to_json_line()?);
        }
        Command::Sweep { kind, level } => {
            let mut cfg = cfg;
            if let Some(k) = kind {
                cfg.sweep_kinds = vec![*k];
            }
            if let Some(l) = level {
                cfg.sweep_levels = vec![*l];
            }
            let pairs = input_pairs(&cfg)?;
            let out = run_sweep(&cfg, &pairs, Some(&cfg.out))?;
            println!("{} rows written to {}", out.rows.len(), Path::new(&cfg.out).join("sweep.csv").display());
        }
        Command::Selftest => {
            let checks = run_selftest();
            let mut ok = true;
            let mut stdout = std::io::stdout().lock();
            for c in &checks {
                let _ = writeln!(stdout, "{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
                ok &= c.passed;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
