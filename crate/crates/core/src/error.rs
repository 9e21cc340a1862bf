//! Error types shared across the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed block record: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("validation failed for {doc_id}: {message}")]
    Validation { doc_id: String, message: String },

    #[error("unknown node id: {0}")]
    UnknownNode(String),

    #[error("gold tree references block ids missing from the document: {}", ids.join(", "))]
    MissingGoldIds { ids: Vec<String> },

    #[error("corrupt checkpoint at {path}: {message}")]
    CorruptCheckpoint { path: String, message: String },

    #[error("checkpoint version mismatch at {path}: found {found}, expected {expected}")]
    CheckpointVersion {
        path: String,
        found: u32,
        expected: u32,
    },

    #[error("model configuration error: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("generation error: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(doc_id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            doc_id: doc_id.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI. Codes 3..=6 distinguish error families;
    /// clap keeps 2 for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::UnknownNode(_)
            | Error::MissingGoldIds { .. } => 4,
            Error::CorruptCheckpoint { .. } | Error::CheckpointVersion { .. } => 5,
            Error::Config(_) | Error::Training(_) | Error::Generation(_) => 6,
        }
    }
}
