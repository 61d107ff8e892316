//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// CSV ingestion failure, with the 1-based data-row index.
    #[error("data row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Precondition violation on an operation argument.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation that needs at least one event was given none.
    #[error("sample contains no events")]
    NoEvents,

    /// The observed information matrix is singular (flat partial likelihood).
    #[error("singular information matrix: {0}")]
    SingularInformation(String),

    /// A cumulative sum diagram collapsed to fewer than two distinct points.
    #[error("degenerate diagram: {0}")]
    Degenerate(String),

    /// No Chernoff quantile is on file for the requested level.
    #[error("unsupported alpha {alpha}: no Chernoff quantile on file")]
    UnsupportedAlpha { alpha: f64 },

    /// Too many bootstrap or simulation replicates failed.
    #[error("{failed} of {total} replicates failed ({first_failure})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first_failure: String,
    },
}
