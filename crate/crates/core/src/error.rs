use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("payload length mismatch: header declares {expected} values, file holds {found}")]
    PayloadMismatch { expected: usize, found: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid table shape: {0}")]
    InvalidShape(String),

    #[error("period {period} does not divide n_tokens {n_tokens}")]
    PeriodNotDivisor { period: usize, n_tokens: usize },

    #[error("invalid period {0}: must be at least 2")]
    InvalidPeriod(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e}, trace {trace:e})")]
    NotPsd { min_eigenvalue: f64, trace: f64 },

    #[error("within-class scatter is singular (min eigenvalue {0:e})")]
    SingularWithin(f64),

    #[error("fold split is missing residue class {class}: {reason}")]
    MissingClass { class: usize, reason: String },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("no number tokens found in corpus")]
    NoNumberTokens,

    #[error("number value {value} outside 0..{n_values}")]
    NumberOutOfRange { value: u32, n_values: usize },

    #[error("swap pool for sequence {sequence} holds {available} numbers but {needed} are needed")]
    PoolTooShort {
        sequence: usize,
        needed: usize,
        available: usize,
    },

    #[error("number vocabularies differ between corpora")]
    VocabMismatch,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
