use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input document. `line` is 1-based; 0 when unknown.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed input that violates a domain invariant.
    #[error("validation error in {field}: {message}")]
    Validation { field: String, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("record {0} carries no soft probability vectors")]
    MissingSoft(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("cosine similarity undefined for an all-zero vector")]
    ZeroVector,

    #[error("calibration needs both same-writer and different-writer pairs")]
    DegenerateLabels,

    #[error("class {class} out of range for feature f{feature} (cardinality {cardinality})")]
    OutOfRange {
        feature: usize,
        class: usize,
        cardinality: usize,
    },

    #[error("no training pairs supplied")]
    EmptyTrainingSet,

    #[error("distance vector does not conform to the network: {0}")]
    NonconformantVector(String),

    #[error("hypothesis mismatch: {0}")]
    HypothesisMismatch(String),

    #[error("structure contains a cycle through f{0}")]
    CyclicStructure(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
