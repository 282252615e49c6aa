use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("truncation failure: {0}")]
    Truncation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("overflow: {0}")]
    Overflow(String),
}
