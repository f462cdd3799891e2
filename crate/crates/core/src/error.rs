use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, NmfError>;

#[derive(Debug, Error)]
pub enum NmfError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("explicit zero stored at ({row}, {col})")]
    ExplicitZero { row: usize, col: usize },

    #[error("duplicate coordinate ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has no stored entries")]
    EmptyMatrix,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible sparsity {0}: must lie in [0, 1)")]
    InfeasibleSparsity(f64),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl NmfError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        NmfError::Io {
            path: path.into(),
            source,
        }
    }
}
