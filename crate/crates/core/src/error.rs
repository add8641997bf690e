use thiserror::Error;

/// Errors raised by the filtering, model and benchmark layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("shape mismatch: expected {expected}, got {got} ({context})")]
    Shape {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("non-finite value at sigma point {index}")]
    NonFinite { index: usize },

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("covariance is not positive semi-definite (jitter schedule exhausted)")]
    NonPsdCovariance,

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("degenerate camera depth {depth:e}")]
    DegenerateDepth { depth: f64 },

    #[error("no measurements available for update")]
    NoMeasurement,

    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    #[error("degenerate alignment: {0}")]
    DegenerateAlignment(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, FilterError>;
