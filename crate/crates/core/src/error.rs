use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error(
        "nonpositive SAV energy: E + C0 = {value:e} is not above {threshold:e}; raise c0"
    )]
    NonpositiveSavEnergy { value: f64, threshold: f64 },

    #[error(
        "singular rank-one denominator: |1 + tau*chi/4| = {value:e} is below the guard {guard:e}; reduce tau"
    )]
    SingularDenominator { value: f64, guard: f64 },

    #[error("final time {t_end} is not an integer multiple of tau = {tau}")]
    NonIntegerStepCount { t_end: f64, tau: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last update {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate reference value for {quantity}: |{value:e}| < 1e-14")]
    DegenerateReference { quantity: &'static str, value: f64 },

    #[error("convergence order needs two positive errors, got {0:e} and {1:e}")]
    NonpositiveError(f64, f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
