use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("turn index {index} out of range (conversation has {len} turns)")]
    TurnOutOfRange { index: usize, len: usize },

    #[error("turn {turn} needs a chosen rewrite for earlier turn {missing}")]
    MissingRewrite { turn: usize, missing: usize },

    #[error("invalid conversation {id}: {reason}")]
    InvalidConversation { id: String, reason: String },

    #[error("model vocabulary is empty")]
    EmptyVocabulary,

    #[error("invalid next-token distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid probability list: {0}")]
    InvalidProbabilities(String),

    #[error("invalid rewrite set {conversation_id}_{turn_index}: {reason}")]
    InvalidRewriteSet {
        conversation_id: String,
        turn_index: usize,
        reason: String,
    },

    #[error("all rewrites tokenize to empty")]
    EmptyRewrites,

    #[error("query has no terms")]
    EmptyQuery,

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in vector for {0:?}")]
    NonFinite(String),

    #[error("encoder failure: {0}")]
    Encoder(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invalid {what} format: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }

    /// True for filesystem failures, as opposed to bad data or arguments.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
