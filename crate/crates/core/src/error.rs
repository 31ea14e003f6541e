use thiserror::Error;

/// Errors raised by the library. Violations found by `validate` are not
/// errors; they are returned as data.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Caller supplied arguments outside an operation's domain.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("input has {actual} bits but the tree expects {expected}")]
    InputLength { expected: usize, actual: usize },

    #[error("{what} needs n = {n} variables, above the cap of {cap}")]
    Capacity {
        what: &'static str,
        n: usize,
        cap: usize,
    },

    /// Malformed tree text. Line and column are 1-based.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
