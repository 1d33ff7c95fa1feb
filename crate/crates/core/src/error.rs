use std::path::PathBuf;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("id {0} not found")]
    NotFound(u64),

    #[error("unknown document ids: {0:?}")]
    UnknownIds(Vec<u64>),

    #[error("store is frozen; writes are rejected")]
    Frozen,

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("malformed {kind} data: {message}")]
    Format { kind: &'static str, message: String },

    #[error("{}: {inner}", path.display())]
    File { path: PathBuf, inner: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(kind: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            message: message.into(),
        }
    }

    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    /// Attaches a file path to an error raised while reading or writing it.
    pub fn at_path(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            inner: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
