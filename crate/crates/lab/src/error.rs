use maxfilter_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot serialize output: {0}")]
    Json(#[from] serde_json::Error),

    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type LabResult<T> = Result<T, LabError>;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const ASSERTION_FAILED: i32 = 1;
    pub const CONFIG_OR_DOMAIN: i32 = 2;
    pub const BUDGET_EXCEEDED: i32 = 3;
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(CoreError::BudgetExceeded { .. }) => exit::BUDGET_EXCEEDED,
            LabError::Core(
                CoreError::LpNumericalFailure { .. } | CoreError::NotNicePoint { .. } | CoreError::NegativeRadicand { .. },
            ) => exit::ASSERTION_FAILED,
            _ => exit::CONFIG_OR_DOMAIN,
        }
    }
}
