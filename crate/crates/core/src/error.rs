use thiserror::Error;

/// Failures raised by the propagator, its oracles and the scenario loader.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scale outside the declared validity interval of a profile.
    #[error("scale {lambda} outside the valid interval [0, {lambda_max}]")]
    ScaleOutOfRange { lambda: f64, lambda_max: f64 },

    /// A parameter outside its mathematical domain (negative variance, v <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Coefficient profile or initial condition failed validation.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Operation not defined for this kind of initial condition.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A Dirac datum evaluated where it is still an atom (scale zero).
    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    /// An integration range could not be sized to capture the integrand.
    #[error("range error: {0}")]
    Range(String),

    /// Finite-difference run lost mass through its boundaries or went negative.
    #[error("mass audit failed: {0}")]
    MassAudit(String),

    /// The cumulative distribution handed to the KS statistic is not monotone.
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
