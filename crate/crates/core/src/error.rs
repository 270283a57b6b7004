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

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("line {line}: expected {expected} cells, found {found}")]
    WidthMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("label column has more than two distinct values: {0:?}")]
    TooManyLabels(Vec<String>),

    #[error("positive label `{0}` does not occur in the label column")]
    UnknownPositiveLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {label} has {count} examples; at least 2 are needed to split")]
    ClassTooSmall { label: &'static str, count: usize },

    #[error("training set must contain both classes")]
    SingleClass,

    #[error("dimension mismatch: expected {expected} items, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("unsupported model version {found} (this build reads version {supported})")]
    ModelVersion { found: u64, supported: u64 },

    #[error("{count} items exceed the exact-enumeration cap of {cap}")]
    TooManyItems { count: usize, cap: usize },

    #[error("background sample is empty")]
    EmptyBackground,

    #[error("no example has a positively oriented attribution")]
    DegenerateAttributions,

    #[error("transaction db line {line}: {message}")]
    DbFormat { line: usize, message: String },

    #[error("attribution csv line {line}: {message}")]
    ShapFormat { line: usize, message: String },

    #[error("theory line {line}: {message}")]
    TheoryParse { line: usize, message: String },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("abnormality predicate ab{0} is referenced but never defined")]
    DanglingAbnormality(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
