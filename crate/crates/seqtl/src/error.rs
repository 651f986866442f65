use std::io;
use std::path::PathBuf;

use crate::checkpoint::CheckpointError;
use crate::conll::ConllError;
use crate::embeddings::EmbeddingError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Conll { path: PathBuf, source: ConllError },
    #[error("{}: {source}", path.display())]
    Embeddings { path: PathBuf, source: EmbeddingError },
    #[error("{}: {source}", path.display())]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] seqtl_core::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Conll { .. } | Error::Embeddings { .. } => 4,
            Error::Checkpoint { .. } => 5,
            Error::Config(_) => 2,
            Error::Model(_) => 6,
            Error::Json(_) => 7,
        }
    }
}
