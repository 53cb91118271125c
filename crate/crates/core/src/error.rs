use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DrlError>;

#[derive(Debug, Error)]
pub enum DrlError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("empty corpus: every document was filtered out")]
    EmptyCorpus,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("term index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("document `{0}` has no in-vocabulary tokens and cannot be projected")]
    Unprojectable(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need at least {needed} items, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("perturbed query is identical to the base query in word space")]
    ZeroPerturbation,

    #[error("base relevance is zero; relative change is undefined")]
    ZeroRelevance,

    #[error("invalid perturbation `{label}`: {reason}")]
    InvalidPerturbation { label: String, reason: String },

    #[error("model vocabulary hash {model} does not match supplied vocabulary {supplied}")]
    VocabularyMismatch { model: String, supplied: String },

    #[error("unsupported model file: {0}")]
    ModelFormat(String),

    #[error("query has no in-vocabulary terms (dropped: {})", .0.join(", "))]
    QueryOutOfVocabulary(Vec<String>),

    #[error("score files were produced by different configurations ({0} vs {1})")]
    ConfigHashMismatch(String, String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DrlError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DrlError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for I/O and configuration failures, 1 for
    /// failures inside the metric computations.
    pub fn exit_code(&self) -> i32 {
        match self {
            DrlError::Io { .. }
            | DrlError::MalformedRecord { .. }
            | DrlError::DuplicateId(_)
            | DrlError::Config(_)
            | DrlError::VocabularyMismatch { .. }
            | DrlError::ModelFormat(_)
            | DrlError::ConfigHashMismatch(..)
            | DrlError::Json(_)
            | DrlError::Csv(_) => 2,
            _ => 1,
        }
    }
}
