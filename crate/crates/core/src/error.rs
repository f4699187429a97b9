use thiserror::Error;

/// Errors raised by the controller, the problem domains and the statistics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller violated a precondition (mismatched lengths, empty inputs, ...).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A coordinate fell outside the half-open interval a coding covers.
    #[error("{value} is outside [{lower}, {upper})")]
    Range { value: f64, lower: f64, upper: f64 },
    /// A child could not be evaluated; the run is aborted.
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
