use thiserror::Error;

/// Error type shared by every module in the crate. Variant names are part of
/// the CLI's machine-readable error contract, so keep them stable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unimodular: det = {det}")]
    NonUnimodular { det: f64 },

    #[error("input out of domain: {0}")]
    Domain(String),

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("integrality violated: {0}")]
    Integrality(String),

    #[error("reduction did not terminate after {iters} iterations; group data is likely malformed")]
    ReductionFailed { iters: usize },

    #[error("invalid step size: {0}")]
    InvalidStep(String),

    #[error("step count overflow: {0}")]
    StepOverflow(String),

    #[error("observable not usable here: {0}")]
    InvalidObservable(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("unsupported degree: {0}")]
    UnsupportedDegree(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable tag used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonUnimodular { .. } => "NonUnimodularError",
            Error::Domain(_) => "DomainError",
            Error::Regime(_) => "RegimeError",
            Error::Index(_) => "IndexError",
            Error::Range(_) => "RangeError",
            Error::Integrality(_) => "IntegralityError",
            Error::ReductionFailed { .. } => "ReductionError",
            Error::InvalidStep(_) => "InvalidStepError",
            Error::StepOverflow(_) => "StepOverflowError",
            Error::InvalidObservable(_) => "InvalidObservableError",
            Error::DegenerateFit(_) => "DegenerateFitError",
            Error::Quadrature(_) => "QuadratureError",
            Error::UnsupportedDegree(_) => "UnsupportedDegreeError",
            Error::Config(_) => "ConfigError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
