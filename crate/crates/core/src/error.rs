use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("generator is not anti-Hermitian (max |G + G^dag| = {deviation:.3e})")]
    NonUnitaryGenerator { deviation: f64 },

    #[error("Krylov exponential failed to converge (error estimate {estimate:.3e})")]
    ConvergenceFailure { estimate: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("mean photon number is zero")]
    ZeroMeanPhotonNumber,

    #[error("ill-conditioned eigenvalue solve (residual {residual:.3e})")]
    IllConditioned { residual: f64 },

    #[error("leakage {leakage:.3e} exceeds bound {bound:.3e}")]
    LeakageExceeded { leakage: f64, bound: f64 },

    #[error("validity guard tripped: {0}")]
    GuardTripped(String),

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
