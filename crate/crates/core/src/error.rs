use alloc::string::String;
use core::fmt;

/// Failure categories shared by every module.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: bad dimensions, chart violations, mismatched grids.
    Validation(String),
    /// Well-formed request outside the supported range (e.g. `r >= 2`).
    OutOfScope(String),
    /// Combination the implementation does not provide.
    Unsupported(String),
    /// Non-finite values, failed convergence, unreliable truncation.
    Numerical(String),
    /// An analytic criterion or precondition was not met.
    Criterion(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn out_of_scope(msg: impl Into<String>) -> Self {
        Error::OutOfScope(msg.into())
    }
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn criterion(msg: impl Into<String>) -> Self {
        Error::Criterion(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(m) => write!(f, "validation error: {m}"),
            Error::OutOfScope(m) => write!(f, "out of scope: {m}"),
            Error::Unsupported(m) => write!(f, "unsupported: {m}"),
            Error::Numerical(m) => write!(f, "numerical failure: {m}"),
            Error::Criterion(m) => write!(f, "criterion not met: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
