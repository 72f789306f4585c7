//! Bi-directional self-supervised registration and fusion of misaligned
//! infrared/visible image pairs.
//!
//! The crate is organised bottom-up: [`imgcore`] holds rasters and the
//! resampling/gradient primitives, [`proxy`] the invertible patch transforms
//! used for self-supervision, [`losses`] every objective term, [`register`]
//! the control-grid optimizer, [`fuse`] and [`metrics`] the fusion stage and
//! its quality measures, and [`harness`] the misalignment synthesis, corpus,
//! configuration and sweep pipeline used by the CLI.

pub mod error;
pub mod fuse;
pub mod harness;
pub mod imgcore;
pub mod losses;
pub mod metrics;
pub mod proxy;
pub mod register;

pub use error::{Error, Result};
