use std::path::PathBuf;

use field_atlas_core::Error as CoreError;

pub type Result<T, E = AtlasError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AtlasError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: card {card_id} breaks the chain: {source}")]
    BadCard {
        line: usize,
        card_id: String,
        #[source]
        source: CoreError,
    },
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<AtlasError>,
    },
    #[error("session file is empty; the first line must be a session header")]
    MissingHeader,
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("session {0} already exists")]
    SessionExists(String),
    #[error("learner {0} has no sessions")]
    LearnerNotFound(String),
    #[error("card {0} not found")]
    CardNotFound(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid config: {0}")]
    Config(String),
}

impl AtlasError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AtlasError::Io {
            path: path.into(),
            source,
        }
    }
}
