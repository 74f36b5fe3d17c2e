use thiserror::Error;

/// Errors raised by the consensus toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A model or experiment configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The numerical procedure produced a non-finite value or could not proceed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An exact integer quantity does not fit in the representable range.
    #[error("overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
