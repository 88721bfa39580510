use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, RgcError>;

#[derive(Debug, Error)]
pub enum RgcError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
}

impl RgcError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RgcError::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes a numerical error with solver context (iteration, step).
    pub fn with_context(self, ctx: &str) -> Self {
        match self {
            RgcError::Numerical(msg) => RgcError::Numerical(format!("{ctx}: {msg}")),
            other => other,
        }
    }
}
