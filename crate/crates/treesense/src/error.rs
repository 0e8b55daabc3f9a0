use thiserror::Error;

/// Errors produced by the treesense library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is outside the documented domain of an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A measurement was requested that the oracle's remaining budget cannot
    /// cover. Recoverable: adaptive estimators catch this and return a
    /// truncated estimate.
    #[error("measurement budget exhausted: needed {needed}, remaining {remaining}")]
    BudgetExhausted { needed: f64, remaining: f64 },

    /// An experiment configuration failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    /// The requested experiment cannot produce any result under its budget.
    #[error("infeasible experiment: {0}")]
    Infeasible(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
