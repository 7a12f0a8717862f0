//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes across dictionary construction, representation search,
/// bound evaluation, quantization, and the refinement codec.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("empty dictionary")]
    EmptyDictionary,

    #[error("requested {need} bytes, exceeding the {budget}-byte memory budget")]
    SizeOverflow { need: u128, budget: u64 },

    #[error("requested {need} solves, exceeding the work budget of {budget}")]
    BudgetExceeded { need: u128, budget: u64 },

    #[error("rank-deficient system: atom {index} is numerically dependent on its predecessors")]
    RankDeficient { index: usize },

    #[error("index {index} out of range: must be below {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed dictionary file: {0}")]
    Format(String),
}
