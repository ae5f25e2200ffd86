use alloc::string::String;

use crate::model::SequenceId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate control point configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("point maps to infinity (homogeneous scale {0:e})")]
    PointAtInfinity(f64),
    #[error("sequence at index {0} has a zero embedding; cosine distance is undefined")]
    ZeroVector(usize),
    #[error("at least {needed} sequences are required, got {got}")]
    TooFewSequences { needed: usize, got: usize },
    #[error("unknown query sequence {0}")]
    UnknownQuery(SequenceId),
    #[error("query {0} has no relevant item in its ranked list")]
    NoRelevantItem(SequenceId),
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig { field, reason: reason.into() }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
