use std::path::PathBuf;

use crate::datamodel::FeatureNo;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("missing label column `{0}`")]
    MissingLabelColumn(String),
    #[error("row {row}, column `{column}`: `{value}` is not numeric")]
    InvalidCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: label `{value}` is not 0/1 or survived/non-survived")]
    InvalidLabel { row: usize, value: String },
    #[error("feature {0} has no observed values")]
    AllMissing(FeatureNo),
    #[error("feature {0} is not present in the table")]
    MissingFeature(FeatureNo),
    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),
    #[error("both classes are required: {0}")]
    SingleClass(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for problems with the caller's input rather than the analysis.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Stage { stage, source } => stage == "ingest" && source.is_input_error(),
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::UnknownColumn(_)
            | Error::DuplicateColumn(_)
            | Error::MissingLabelColumn(_)
            | Error::InvalidCell { .. }
            | Error::InvalidLabel { .. }
            | Error::AllMissing(_)
            | Error::MissingFeature(_)
            | Error::FeatureMismatch(_)
            | Error::InvalidArgument(_) => true,
            Error::SingleClass(_) | Error::Degenerate(_) => false,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
