//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed export at byte {offset} (last good tag {last_tag:?}): {message}")]
    MalformedExport {
        offset: usize,
        last_tag: Option<String>,
        message: String,
    },

    #[error("record {record_id} has no usable publication year")]
    MissingYear { record_id: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("column for venue {venue:?} has zero norm")]
    ZeroNormColumn { venue: String },

    #[error("column for venue {venue:?} has zero variance")]
    ZeroVarianceColumn { venue: String },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("unknown venue {venue:?}")]
    UnknownVenue { venue: String },

    #[error("partition covers {actual} nodes, expected {expected}")]
    PartitionMismatch { expected: usize, actual: usize },

    #[error("graph has {nodes} nodes, exhaustive search capped at {limit}")]
    TooManyNodes { nodes: usize, limit: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bad file format in {path}: {message}")]
    Format { path: String, message: String },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
