use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::LabelType;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },

    #[error("sentence {sent_id}: {message}")]
    SpanOutOfBounds { sent_id: String, message: String },

    #[error("unknown sentence id {0}")]
    UnknownSentence(String),

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("label type mismatch: expected {expected}, found {found}")]
    LabelMismatch { expected: LabelType, found: LabelType },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("correlation undefined: {0}")]
    Undefined(String),

    #[error("missing difficulty score for sentence {0}")]
    MissingScore(String),

    #[error("degenerate training set")]
    DegenerateTrainingSet,

    #[error("non-finite value during {0}")]
    NonFinite(String),

    #[error("no informative pairs")]
    NoInformativePairs,

    #[error("no expert annotation for documents: {}", .0.join(", "))]
    MissingExpert(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Malformed { .. }
                | Error::SpanOutOfBounds { .. }
                | Error::UnknownSentence(_)
                | Error::InvalidCorpus(_)
                | Error::InvalidConfig(_)
                | Error::LabelMismatch { .. }
                | Error::MissingExpert(_)
                | Error::MissingScore(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
