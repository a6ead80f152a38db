//! Crate-wide error type.

use std::fmt;

/// Errors produced by the library.
#[derive(Debug)]
pub enum Error {
    /// A numeric argument fell outside its documented domain.
    Domain(String),
    /// A design optimization has no feasible degree distribution under the
    /// requested configuration. Carries the first violated grid point when known.
    Infeasible {
        what: String,
        grid_point: Option<f64>,
    },
    /// Alternating optimization stopped making progress before reaching a
    /// feasible, converged solution.
    Stalled(String),
    /// A degree budget cannot be reconciled between the two sides of a graph.
    DegreeBudget(String),
    /// Random graph construction failed after the bounded retry budget.
    Construction(String),
    /// Observations or payloads contradict each other (corrupted input or a
    /// violated code constraint). Never silently repaired.
    Integrity(String),
    /// A file could not be parsed. Carries a 1-based line number when known.
    Parse { line: usize, msg: String },
    /// File format version not understood by this build.
    VersionMismatch { found: String, expected: String },
    /// Configuration file is missing a key or holds an unusable value.
    Config(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Infeasible { what, grid_point } => match grid_point {
                Some(x) => write!(f, "infeasible configuration: {what} (violated at grid point {x})"),
                None => write!(f, "infeasible configuration: {what}"),
            },
            Error::Stalled(msg) => write!(f, "optimization stalled: {msg}"),
            Error::DegreeBudget(msg) => write!(f, "irreconcilable degree budget: {msg}"),
            Error::Construction(msg) => write!(f, "graph construction failed: {msg}"),
            Error::Integrity(msg) => write!(f, "integrity error: {msg}"),
            Error::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            Error::VersionMismatch { found, expected } => {
                write!(f, "version mismatch: found {found:?}, expected {expected:?}")
            }
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
