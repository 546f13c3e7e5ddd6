use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AuditError> = std::result::Result<T, E>;

/// Broad failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration or arguments.
    Validation,
    /// The input data cannot support the requested computation.
    Data,
    /// Anything else (I/O on outputs, serialization).
    Internal,
}

/// Which side of a two-sample comparison came up empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Positive => f.write_str("positive"),
            Side::Negative => f.write_str("negative"),
        }
    }
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid record {id:?}: {message}")]
    InvalidRecord { id: String, message: String },

    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    #[error("document {0:?} has no score")]
    MissingScore(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("vocabulary is empty after stopword and document-frequency filtering")]
    EmptyVocabulary,

    #[error("training labels contain a single class ({positives} positive of {total})")]
    SingleClass { positives: usize, total: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("k = {k} is outside 1..={vocabulary}")]
    KOutOfRange { k: usize, vocabulary: usize },

    #[error("no {0} scores to compare")]
    EmptySide(Side),

    #[error("non-finite score encountered")]
    NonFiniteScore,

    #[error("{metric} undefined for {group:?}: no {side} examples in the {part}")]
    InsufficientData {
        metric: &'static str,
        group: String,
        side: Side,
        part: &'static str,
    },

    #[error("statistic is undefined on the full sample")]
    UndefinedStatistic,

    #[error("{discarded} of {total} bootstrap resamples were degenerate (limit 20%)")]
    TooManyDegenerate { discarded: usize, total: usize },

    #[error("meta-metrics need at least two groups, got {0}")]
    TooFewGroups(usize),

    #[error("zero variance in {0}; correlation undefined")]
    ZeroVariance(&'static str),

    #[error("need at least {required} points, got {found}")]
    TooFewPoints { found: usize, required: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("document {id:?} has no {arm} score")]
    Coverage { id: String, arm: String },

    #[error("pool document {0:?} also appears in the training set")]
    PoolOverlap(String),

    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),

    #[error("serialization failed: {0}")]
    Serialization(String),
}

impl AuditError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            AuditError::Config(_)
            | AuditError::InfeasibleSpec(_)
            | AuditError::KOutOfRange { .. } => ErrorKind::Validation,
            AuditError::Serialization(_) => ErrorKind::Internal,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AuditError::Io {
            path: path.into(),
            source,
        }
    }
}
