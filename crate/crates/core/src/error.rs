use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Diagnostics attached to a failed maximum-likelihood reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionDiagnostics {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub objective: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error(
        "reconstruction did not converge after {} iterations (|grad| = {:.3e}, objective = {:.6e})",
        .0.iterations, .0.gradient_norm, .0.objective
    )]
    Reconstruction(ReconstructionDiagnostics),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidArgument(_) | Error::OutOfRange(_) => 2,
            Error::Fit(_) | Error::Reconstruction(_) | Error::InvalidState(_) => 3,
            Error::Io { .. } | Error::Parse { .. } => 4,
        }
    }
}
