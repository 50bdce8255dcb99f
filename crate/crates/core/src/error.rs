// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Failure modes shared by every module.
///
/// The CLI maps [`Error::is_validation`] errors to exit code 2 and the rest
/// to exit code 1.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("empty domain: {0}")]
    EmptyDomain(String),
    #[error("insufficient range: {0}")]
    InsufficientRange(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("form is not eligible: {0}")]
    NotEligible(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Internal(_) | Error::Overflow(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(format!($($arg)*)))
    };
}
pub(crate) use bail;
