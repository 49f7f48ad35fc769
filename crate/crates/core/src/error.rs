//! Error type shared across the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A precondition on an argument was violated.
    Parameter(String),
    /// A stencil was requested at a node that cannot support it.
    Stencil(String),
    /// Two fields on different grids were combined.
    GridMismatch(String),
    /// A gradient-dependent operator was evaluated at a vanishing gradient
    /// without a fallback enabled.
    DegenerateGradient(String),
    /// A computation produced a non-finite value.
    NonFinite(String),
    /// The relaxation left the admissible range.
    BlowUp { sup: f64, bound: f64 },
    /// Configuration text failed to parse.
    Parse { line: usize, message: String },
    Io(std::io::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn stencil(msg: impl Into<String>) -> Self {
        Error::Stencil(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(m) => write!(f, "parameter error: {m}"),
            Error::Stencil(m) => write!(f, "stencil error: {m}"),
            Error::GridMismatch(m) => write!(f, "grid mismatch: {m}"),
            Error::DegenerateGradient(m) => write!(f, "degenerate gradient: {m}"),
            Error::NonFinite(m) => write!(f, "non-finite value: {m}"),
            Error::BlowUp { sup, bound } => {
                write!(f, "iteration blow-up: sup |u| = {sup:.3e} exceeds {bound:.3e}")
            }
            Error::Parse { line, message } => write!(f, "config line {line}: {message}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
