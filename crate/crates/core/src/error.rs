use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the model, the solvers and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("argument outside domain: {0}")]
    Domain(String),

    /// The secrecy targets cannot be met. `users` lists the users whose
    /// target was shown to be unreachable (empty when the failure is joint).
    #[error("infeasible: {reason}")]
    Infeasible { users: Vec<usize>, reason: String },

    #[error("instance too large for enumeration: {assignments} assignments (limit {limit})")]
    TooLarge { assignments: f64, limit: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
