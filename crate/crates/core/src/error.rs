use thiserror::Error;

/// Errors raised by the probability, information and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("probabilities sum to {sum}, expected 1 (tolerance {tolerance:e})")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("invalid probability {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },

    #[error("resource limit: {what} needs {requested} entries but the budget is {budget}")]
    ResourceLimit {
        what: String,
        requested: u128,
        budget: u128,
    },

    #[error("encoding failure: every codeword has zero likelihood for the source sequence")]
    EncodingFailure,

    #[error("empty summary: at least one trial is required")]
    EmptySummary,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
