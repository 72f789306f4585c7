use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("image too small: {width}x{height}, need at least {min_width}x{min_height}")]
    TooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimensions {width}x{height} are not divisible into {n}x{n} patches")]
    Indivisible { width: usize, height: usize, n: i32 },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_same_dims(
    expected: (usize, usize),
    actual: (usize, usize),
) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
