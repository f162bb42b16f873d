use std::path::PathBuf;

use crate::span::Span;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Character offsets outside the text or an empty/inverted range.
    #[error("character range [{start}, {end}) is invalid for text of length {len}")]
    Range { start: usize, end: usize, len: usize },

    #[error("span {span} is out of bounds for content with {n_tokens} tokens")]
    Bounds { span: Span, n_tokens: usize },

    #[error("spans {first} and {second} overlap")]
    Overlap { first: Span, second: Span },

    #[error("{0}")]
    Input(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("record {record:?}: {message}")]
    Validation { record: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(message: impl Into<String>) -> Self {
        Error::Input(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn validation(record: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { record: record.into(), message: message.into() }
    }
}
