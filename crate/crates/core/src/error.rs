use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the model, sampler and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounds: lower {lo} is not below upper {hi}")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("all categorical weights vanished for respondent {n}, time {t}, attribute {k}")]
    WeightUnderflow { n: usize, t: usize, k: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),

    #[error("sweep {sweep}: {source}")]
    Sweep {
        sweep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corrupt chain file: {0}")]
    Corrupt(String),

    #[error("unsupported chain file version {found} (expected {expected})")]
    VersionMismatch { found: String, expected: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
