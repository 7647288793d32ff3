use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("attribute `{attribute}`: unknown category `{label}`")]
    UnknownCategory { attribute: String, label: String },

    #[error("attribute `{attribute}`: `{value}` is not a number")]
    NonNumeric { attribute: String, value: String },

    #[error("attribute `{attribute}`: value `{value}` is not finite")]
    NonFiniteValue { attribute: String, value: String },

    #[error("missing value for attribute `{attribute}`")]
    MissingAttribute { attribute: String },

    #[error("unknown attribute `{name}`")]
    UnknownAttribute { name: String },

    #[error("row {row}: {source}")]
    AtRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("duplicate case id `{id}`")]
    DuplicateId { id: String },

    #[error("dataset contains no records")]
    EmptyDataset,

    #[error("input is empty")]
    EmptyInput,

    #[error("input contains a non-finite value")]
    NonFinite,

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("ordinal attribute `{attribute}` has no configured level order")]
    MissingOrdinalOrder { attribute: String },

    #[error("`{label}` is not a level of this ordinal measure")]
    UnknownLevel { label: String },

    #[error("query has no attribute with a positive weight")]
    NoUsableAttributes,

    #[error("query must contain at least one attribute")]
    EmptyQuery,

    #[error("case base is empty")]
    EmptyCaseBase,

    #[error("no numeric attribute available for the Euclidean baseline")]
    NoNumericAttributes,

    #[error("label attribute `{attribute}` is missing or not categorical")]
    LabelMissing { attribute: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("file is empty")]
    EmptyFile,

    #[error("row {row}: expected {expected} fields, found {found}")]
    MalformedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("corrupt model file: {0}")]
    SchemaCorruption(String),
}

impl Error {
    pub(crate) fn at_row(self, row: usize) -> Self {
        Error::AtRow {
            row,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
