use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of an input file could not be parsed.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    /// Parsed data violates a type invariant.
    #[error("invalid data: {0}")]
    Validation(String),

    #[error("document `{0}` has no segments")]
    EmptyDocument(String),

    #[error(
        "segment {seg_index} of document `{doc_id}` carries no token sequence; \
         exact matching needs `tokens` on every segment (re-encode with tokens or use --sdm soft)"
    )]
    MissingTokens { doc_id: String, seg_index: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index format: {0}")]
    Format(String),

    #[error("unresolved ids: {}", .0.join(", "))]
    Unresolved(Vec<String>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
