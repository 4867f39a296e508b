use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite logits")]
    NonFiniteLogits,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid log-probability vector: {0}")]
    InvalidLogProbs(String),

    #[error("invalid labeler count s={s}: {reason}")]
    InvalidLabelers { s: u32, reason: &'static str },

    #[error("class label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input vector")]
    NonFiniteInput,

    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("model assigns zero rejection probability to every pool point")]
    ZeroRejectionProbability,

    #[error("objective `{kind}` returned -inf at batch example {index}")]
    InfiniteObjective { kind: &'static str, index: usize },

    #[error("objective `{kind}` cannot score a {input} input")]
    IncompatibleInput { kind: &'static str, input: &'static str },

    #[error("training diverged at epoch {epoch}: term `{term}` is not finite")]
    Diverged { epoch: usize, term: &'static str },

    #[error("dataset has no labelled examples")]
    NoLabelledExamples,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}
