use thiserror::Error;

/// Errors raised by mesh construction, the solvers and the diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular local system on interval {interval} (tau = {tau:e}, operator {operator})")]
    SingularStep {
        interval: usize,
        tau: f64,
        operator: String,
    },

    #[error("resolvent solve failed at lambda = {re:e}{im:+e}i (relative residual {residual:e})")]
    Resolvent { re: f64, im: f64, residual: f64 },

    #[error("evaluation too close to a pole at z = {re:e}{im:+e}i (condition estimate {condition:e})")]
    NearPole { re: f64, im: f64, condition: f64 },

    #[error("operator configuration: {0}")]
    Configuration(String),

    #[error("integral appears divergent: tail carries {tail_fraction:.3} of the total")]
    Divergent { tail_fraction: f64 },

    #[error("reference under-resolved: halving the resolution changed the result by {relative_change:.3e}")]
    UnderResolved { relative_change: f64 },

    #[error("scheme violation: {0}")]
    SchemeViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
