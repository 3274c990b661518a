use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("series tail {achieved_tail:e} still above tolerance after {terms} terms")]
    Truncation { achieved_tail: f64, terms: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("alternative index {index} out of range for k = {k}")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("alternative {index} has no observations yet")]
    Uninitialized { index: usize },

    #[error("budget {budget} is below the required minimum {needed}")]
    InsufficientBudget { needed: u64, budget: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {what} (residual {residual:e})")]
    Numerical { what: String, residual: f64 },

    #[error("monte carlo path exceeded {cap} steps")]
    PathCap { cap: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
