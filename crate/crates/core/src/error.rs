use std::fmt;

use thiserror::Error;

/// A rejected input row, numbered from 1 for the first data row after the header.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDiagnostic {
    pub row: usize,
    pub message: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{} malformed row(s); first: {}", .0.len(), .0.first().map(|d| d.to_string()).unwrap_or_default())]
    Rejected(Vec<RowDiagnostic>),

    #[error("corrupted trace: conflicting duplicate evaluation {0}")]
    ConflictingDuplicate(String),

    #[error("invalid base: {0}")]
    InvalidBase(String),

    #[error("invalid roster: {0}")]
    InvalidRoster(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("unknown predictor `{0}`")]
    UnknownPredictor(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("undefined challenge: {0}")]
    UndefinedChallenge(String),

    #[error("untestable sample: {0}")]
    Untestable(String),

    #[error("unsolvable landmark profile for dataset `{0}`")]
    UnsolvableProfile(String),

    #[error("malformed strategy label `{0}`")]
    MalformedLabel(String),

    #[error("strategy `{label}` requires {what}")]
    MissingInput { label: String, what: &'static str },

    #[error("k = {k} outside [1, {max}]")]
    KOutOfRange { k: usize, max: usize },

    #[error("no satisfier for dependency of `{0}` in roster")]
    UnsatisfiableDependency(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported alpha {0}; expected 0.05 or 0.10")]
    UnsupportedAlpha(f64),

    #[error("invalid surface manifest: {0}")]
    InvalidSurface(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error originates in caller-supplied input rather than a fault in the toolkit.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
