use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Rejection sampling gave up; the validity rules leave (almost) nothing to draw from.
    #[error("{0} consecutive draws were rejected by the validity rules")]
    DegenerateRules(u64),

    #[error("epoch level {0} is not one of the configured epoch levels")]
    UnknownEpochs(u32),

    #[error("population has {len} entries, need at least {need}")]
    PopulationTooSmall { len: usize, need: usize },

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{path}:{line}: {message}")]
    TraceFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("trace invariant violated: {0}")]
    TraceInvariant(String),

    #[error("trace lacks required context: {0}")]
    MissingContext(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
