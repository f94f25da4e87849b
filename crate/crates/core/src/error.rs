use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: cannot parse `{text}`")]
    Parse {
        path: PathBuf,
        line: usize,
        text: String,
    },

    #[error("{path}: line {line}: timestamps must be non-negative and strictly increasing")]
    MalformedAnnotation { path: PathBuf, line: usize },

    #[error("{0}: activation text file has no `#fps=` header")]
    MissingFps(PathBuf),

    #[error("corrupt activation: {0}")]
    CorruptActivation(String),

    #[error("state space: {0}")]
    StateSpace(String),

    #[error("tempo constraint: {0}")]
    Constraint(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient reference: {0}")]
    InsufficientReference(String),

    #[error("no reference beat falls inside the activation curve")]
    NoOverlap,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
