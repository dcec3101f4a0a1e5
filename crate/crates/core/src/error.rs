use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("ellipticity violation: {0}")]
    EllipticityViolation(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("zero pivot at row {0}")]
    ZeroPivot(usize),

    #[error("resolution error: macro spacing {spacing} exceeds l/8 = {limit}; increase cells per period")]
    Resolution { spacing: f64, limit: f64 },

    #[error("cross-check failure: {0}")]
    CrossCheckFailure(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("unsupported coefficient: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
