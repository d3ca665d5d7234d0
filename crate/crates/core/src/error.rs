use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the range an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A size or memory cap would be exceeded.
    #[error("resource error: {0}")]
    Resource(String),

    /// A hypothesis the caller asserted does not hold within the search budget.
    #[error("hypothesis violated at desk scale: {0}")]
    Hypothesis(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn resource<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Resource(msg.into()))
}
