use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },

    #[error("line {line}: {reason}")]
    MalformedLine { line: u64, reason: String },

    #[error("{path}: {cause}")]
    File { path: PathBuf, cause: io::Error },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    #[error("empty sentence")]
    EmptySentence,

    #[error("no adjacent candidates for record {0}")]
    NoAdjacentCandidates(usize),

    #[error("model format: {0}")]
    Format(String),

    #[error(transparent)]
    Scorer(#[from] crate::accept::protocol::ScorerError),
}

impl Error {
    pub fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::File { path: path.into(), cause: source }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
