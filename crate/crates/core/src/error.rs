use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("point {point:?} is outside the chart: {reason}")]
    Domain { point: Vec<f64>, reason: String },

    #[error("metric is not positive definite at {point:?}")]
    DegenerateMetric { point: Vec<f64> },

    #[error("{operation} is not defined in dimension {dimension}")]
    UnsupportedDimension { operation: &'static str, dimension: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid warp profile: {0}")]
    InvalidWarp(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParameter { name: String, value: f64, reason: String },

    #[error("soliton-residual-failed: max |Ric + Hess f - λg| = {max_residual:e} exceeds {tolerance:e}")]
    SolitonResidualFailed { max_residual: f64, tolerance: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("diagnostic not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
