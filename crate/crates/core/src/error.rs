use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("invalid order: {0}")]
    InvalidOrder(usize),
    #[error("invalid smoothing parameter: {0}")]
    InvalidAlpha(f64),
    #[error("nothing to score")]
    NothingToScore,
    #[error("invalid temperature: {0}")]
    InvalidTemperature(f64),
    #[error("invalid nucleus: {0}")]
    InvalidNucleus(String),
    #[error("empty nucleus")]
    EmptyNucleus,
    #[error("bin distribution does not match layout: {0}")]
    LayoutMismatch(String),
    #[error("zero-probability token at position {0}")]
    ZeroProbability(usize),
    #[error("undefined CV: mean of the series is zero")]
    UndefinedCv,
    #[error("empty sample")]
    EmptySample,
    #[error("non-finite value in sample")]
    NonFiniteSample,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-finite feature `{0}`")]
    NonFiniteFeature(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing header")]
    MissingHeader,
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
