//! Misalignment synthesis, the bundled corpus, run configuration,
//! artifact persistence and the robustness sweep.

pub mod config;
pub mod corpus;
pub mod misalign;
pub mod persist;
pub mod selftest;
pub mod sweep;

pub use config::{crop_to_multiple, RunConfig, DEFAULT_SWEEP_LEVELS};
pub use corpus::{bundled_corpus, corpus, generate_pair, ScenePair, CORPUS_PAIRS, CORPUS_SIZE};
pub use misalign::{synth_misalign, true_field, MisalignmentKind, MisalignmentSpec};
pub use persist::{load_artifacts, save_fused, save_registration, save_report, Artifacts};
pub use selftest::{run_selftest, Check};
pub use sweep::{input_pairs, load_pair_dir, run_pair, run_sweep, sweep_csv, write_pair, PairOutcome, SweepOutcome, SweepRow};
