use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("vertex out of domain: {0}")]
    OutOfDomain(String),

    #[error("{what} exceeded budget of {budget}")]
    BudgetExceeded { what: &'static str, budget: u64 },

    #[error("value {value} outside declared range [{lo}, {hi}]")]
    RangeViolation { value: String, lo: String, hi: String },

    #[error("function is undefined at {0}")]
    PartialFunction(String),

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: String, hi: String },

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("coordinate x{index} out of range for dimension {dim}")]
    Dimension { index: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("not a vertex cover: pair ({0}, {1}) is violated outside the cover")]
    NotACover(String, String),

    #[error("minimum vertex cover exceeds cap {0}")]
    CapExceeded(usize),

    #[error("instance too large: {0}")]
    SizeExceeded(String),

    #[error("retries exhausted after {0} attempts")]
    RetryExhausted(usize),

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
