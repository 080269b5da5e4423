use std::io;

use thiserror::Error;

/// Broad category of a failure, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}: {message}")]
    Row { row: u64, message: String },

    #[error("network has no edges")]
    EmptyNetwork,

    #[error("split interval {name} ({start}..={end}) captures no edges")]
    EmptySplit { name: &'static str, start: i32, end: i32 },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("node {0:?} has no coordinates")]
    MissingCoordinates(String),

    #[error("Katz series does not converge: beta {beta} with spectral radius {radius} (need beta < {bound})")]
    Convergence { beta: f64, radius: f64, bound: f64 },

    #[error("linear system (I - beta A) is singular")]
    Singular,

    #[error("score tables are defined over different candidate universes")]
    UniverseMismatch,

    #[error("score table {0:?} must be normalized first")]
    NotNormalized(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(&'static str),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidSplit(_) | Error::InvalidArgument(_) | Error::Schema(_) => {
                ErrorKind::Config
            }
            Error::Convergence { .. } | Error::Singular => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
