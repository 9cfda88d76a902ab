//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix expected to be positive semi-definite has an eigenvalue
    /// below the negative tolerance band.
    #[error("matrix is not positive semi-definite: eigenvalue {eigenvalue:.3e} below -{tol:.3e}")]
    NotPsd { eigenvalue: f64, tol: f64 },

    /// A size argument is out of range for the operation.
    #[error("invalid size: {0}")]
    InvalidSize(String),

    /// The requested number of rows cannot carry the matrix rank.
    #[error("rank {rank} exceeds what {rows} rows can represent ({need})")]
    RankExceedsRows { rank: usize, rows: usize, need: String },

    /// Two inputs disagree on dimension.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A fold specification is inconsistent with the number of rows.
    #[error("invalid fold specification: {0}")]
    InvalidFoldSpec(String),

    /// A partition does not cover the rows of the data matrix.
    #[error("partition covers {partition_len} rows but data has {rows}")]
    PartitionMismatch { partition_len: usize, rows: usize },

    /// A fold is too small for the requested statistics.
    #[error("fold {fold_id} has {count} rows; at least {min} required")]
    FoldTooSmall { fold_id: usize, count: usize, min: usize },

    /// Wishart degrees of freedom must be at least 1.
    #[error("invalid degrees of freedom: {0}")]
    InvalidDof(usize),

    /// An unpenalized fit requires a positive-definite input.
    #[error("singular input: lambda = 0 requires a positive-definite matrix")]
    SingularInput,

    /// A matrix expected to be positive definite is not.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// A statistic was requested on an empty sample.
    #[error("empty sample")]
    EmptySample,

    /// Paired streams have different lengths.
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    /// Too few replications for the critical-value regime in use.
    #[error("{reps} replications is too small for the 1% critical-value regime (need >= {min})")]
    SampleTooSmall { reps: usize, min: usize },

    /// Malformed input file or argument.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
