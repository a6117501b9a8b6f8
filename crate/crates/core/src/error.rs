use thiserror::Error;

/// Errors produced by the key generation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("not enough samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("insufficient correlation for certification (shrunk covariance {0} <= 0)")]
    InsufficientCorrelation(f64),

    #[error("non-finite exponent value at t = {0}")]
    NonFinite(f64),

    #[error("security target {target} unachievable even when sacrificing all {n} bits")]
    Unachievable { target: f64, n: usize },

    #[error("problem too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("malformed alist data: {0}")]
    Alist(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
