use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One violated invariant, reported with the offending field and its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// A configuration-file problem, located by line (1-based) when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join(.0))]
    Config(Vec<ConfigIssue>),

    #[error("invalid parameters: {}", join(.0))]
    Invalid(Vec<Violation>),

    #[error("degenerate susceptibility denominator ({0})")]
    Domain(String),

    #[error("steady state not reached after {steps} steps (residual {residual:.3e})")]
    NonConvergence { steps: usize, residual: f64 },

    #[error("non-finite field value at z = {z} cm")]
    NonFinite { z: f64 },

    #[error("susceptibility table range exceeded: {0}")]
    TableRange(String),

    #[error(
        "susceptibility table did not reach {tolerance:e} relative error (got {achieved:.3e}); use direct evaluation"
    )]
    TableRefinement { tolerance: f64, achieved: f64 },

    #[error("bad snapshot file {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("output directory {0} is in use by another run")]
    Locked(PathBuf),

    #[error("oracle disagreement: max relative error {max_error:.3e} is not below {tolerance:e}")]
    OracleMismatch { max_error: f64, tolerance: f64 },

    #[error("zero-power field")]
    ZeroPower,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 1 for configuration/input problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::NonConvergence { .. }
            | Error::NonFinite { .. }
            | Error::TableRange(_)
            | Error::TableRefinement { .. }
            | Error::OracleMismatch { .. }
            | Error::ZeroPower => 2,
            Error::Config(_) | Error::Invalid(_) | Error::Snapshot { .. } | Error::Locked(_) | Error::Io(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
