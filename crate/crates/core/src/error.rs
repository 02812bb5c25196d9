use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input at line {line}: {msg}")]
    Malformed { line: u64, msg: String },

    #[error("incomplete trajectory grid: {0}")]
    IncompleteGrid(String),

    #[error("binary format error: {0}")]
    Format(String),

    #[error("payload length mismatch: header implies {expected} bytes, found {found}")]
    LengthMismatch { expected: u64, found: u64 },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration produced a non-finite state at t = {t}")]
    BlowUp { t: f64 },

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("graph is disconnected ({components} connected components)")]
    Disconnected { components: usize },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad numbers rather than bad input files.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. } | Error::Degenerate(_) | Error::Disconnected { .. } | Error::NoConvergence(_)
        )
    }
}
