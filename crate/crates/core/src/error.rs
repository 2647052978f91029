use std::path::PathBuf;

use thiserror::Error;

/// Every failure the pipeline can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("no word survived the vocabulary filters")]
    EmptyVocabulary,
    #[error("corpus is empty or contains no tokens")]
    EmptyCorpus,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
    #[error("topic-word matrix row {row} is not on the simplex")]
    InvalidPhi { row: usize },
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated file: {0}")]
    TruncatedFile(String),
    #[error("image `{0}` has an empty caption")]
    EmptyCaption(String),
    #[error("head outputs sum to {0:e}, cannot normalize")]
    DegenerateOutput(f64),
    #[error("index holds no item of modality `{0}`")]
    EmptyModality(String),
    #[error("no relevant items for queries {0:?}")]
    NoRelevantItems(Vec<usize>),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("incompatible file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than programming faults.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Consistency(_))
    }
}
