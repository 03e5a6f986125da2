use thiserror::Error;

/// Errors produced by the design, evaluation and recovery routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid block structure: {0}")]
    InvalidBlocks(String),

    #[error("index {index} out of range for {len} columns")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("column {column} is degenerate (raw norm {norm:e})")]
    DegenerateColumn { column: usize, norm: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("{count} supports exceed the enumeration cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("line search failed after {backtracks} backtracks")]
    LineSearchFailed { backtracks: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("ground truth vector is zero")]
    ZeroGroundTruth,
}

pub type Result<T> = std::result::Result<T, Error>;
