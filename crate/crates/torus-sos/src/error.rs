use std::fmt;

/// Errors surfaced by the fallible operations of this crate.
#[derive(Debug)]
pub enum Error {
    /// Operands live on tori of different dimension.
    DimMismatch { expected: usize, got: usize },
    /// Input violates a structural requirement (coefficient symmetry, file schema, ...).
    Malformed(String),
    /// Parameters lie outside the valid domain of an operation.
    Domain(String),
    /// A numerical routine failed or left its contract.
    Numerical(String),
    /// A resource budget (grid points, cache entries) would be exceeded.
    Budget(String),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::Malformed(msg) => write!(f, "malformed input: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::Budget(msg) => write!(f, "budget exceeded: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
