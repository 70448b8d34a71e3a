use thiserror::Error;

/// Errors produced by the numerical kernels, state algebra and protocol drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("unsupported spacetime dimension {0} (valid range {1})")]
    UnsupportedDimension(usize, &'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("points are null separated (s = {0})")]
    NullSeparation(f64),

    #[error("worldline never enters the future lightcone of the event")]
    NoIntersection,

    #[error("quadrature did not converge: value {value}, error estimate {error_estimate} after {evaluations} evaluations")]
    NonConvergence {
        value: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    #[error("non-integrable or non-finite integrand near x = {0}")]
    SingularInterior(f64),

    #[error("scalar proper acceleration varies by {0:e} over the window; d = 6 rate is undefined")]
    NonConstantAcceleration(f64),

    #[error("ln(1/delta) fit residual {residual:e} exceeds threshold {threshold:e}")]
    PoorFit { residual: f64, threshold: f64 },

    #[error("invalid Gaussian state: {0}")]
    InvalidState(String),

    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("measurement conditioning matrix is singular")]
    DegenerateMeasurement,

    #[error("uncertainty relation violated: <P^2><Q^2> - <P,Q>^2 = {value:e} < hbar^2/4 = {bound:e}")]
    UncertaintyViolation { value: f64, bound: f64 },

    #[error("invalid teleportation scenario: {0}")]
    InvalidScenario(String),

    #[error("series is under-sampled: {0:.2} samples per oscillation period, need at least 20")]
    UnderSampled(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
