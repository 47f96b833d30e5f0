use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported polynomial degree {0}, expected 1..=4")]
    UnsupportedDegree(usize),

    #[error("assembly failed on cell {cell}: {reason}")]
    AssemblyFailure { cell: usize, reason: String },

    #[error("linear solve failed: {0}")]
    SolverFailure(String),

    #[error("point {0:?} lies outside the domain")]
    OutOfDomain([f64; 2]),

    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),

    #[error("optimization failed: {0}")]
    OptimizationFailure(String),

    #[error("normalization failed: {0}")]
    NormalizationFailure(String),

    #[error("training diverged at epoch {epoch}")]
    TrainingFailure { epoch: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("malformed {what} at line {line}: {reason}")]
    Deserialization {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("incompatible model file version {found:?}, expected {expected:?}")]
    IncompatibleVersion { found: String, expected: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
