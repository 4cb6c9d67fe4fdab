use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A record could not be decoded. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unknown lemma `{0}`")]
    UnknownLemma(String),

    #[error("span [{start}, {end}) is out of range for a sentence of {len} characters")]
    Span { start: usize, end: usize, len: usize },

    /// The instance has too few candidates to be disambiguated and is dropped.
    #[error("instance discarded: `{lemma}` has {candidates} candidate(s)")]
    Discarded { lemma: String, candidates: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scoring backend: {0}")]
    Backend(#[from] BackendError),

    /// Network-level failure talking to a remote service; retrying may help.
    #[error("transport: {0}")]
    Transport(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("expected {expected} scores, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("session unusable after an earlier failure")]
    Poisoned,
    #[error("backend closed the stream")]
    Closed,
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl ToString) -> Self {
        Error::Parse {
            line,
            message: message.to_string(),
        }
    }

    /// Short stable name for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::UnknownLemma(_) => "lookup",
            Error::Span { .. } => "span",
            Error::Discarded { .. } => "discarded",
            Error::InvalidArgument(_) => "argument",
            Error::Backend(_) => "backend",
            Error::Transport(_) => "transport",
            Error::Io(_) => "io",
        }
    }
}
