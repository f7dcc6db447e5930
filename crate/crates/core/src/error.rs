use thiserror::Error;

/// Errors raised by group construction, max filtering and bound computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("group closure exceeded the order cap of {max_order}")]
    ClosureOverflow { max_order: usize },

    #[error("generator {index} is not orthogonal (max deviation {deviation:e})")]
    NotOrthogonal { index: usize, deviation: f64 },

    #[error("group order {order} exceeds the cap of {cap}")]
    SizeOverflow { order: u128, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("signal lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("negative radicand {value:e} in quotient distance; group invariants are broken")]
    NegativeRadicand { value: f64 },

    #[error("linear program stalled after {iterations} pivots")]
    LpNumericalFailure { iterations: usize },

    #[error("point is not in the nice set: {reason}")]
    NotNicePoint { reason: String },

    #[error("budget of {budget} evaluations exceeded; best value so far {best:e}")]
    BudgetExceeded { budget: u64, best: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("invalid tolerance policy: {0}")]
    InvalidTolerance(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
