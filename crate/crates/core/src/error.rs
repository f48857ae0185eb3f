use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point (t = {t}, x = {x}) lies outside the interior cone t > |x|")]
    OutsideCone { t: f64, x: f64 },
    #[error("non-finite value in {stage} at step {step}")]
    NonFinite { stage: &'static str, step: usize },
    #[error("hyperboloid point (t = {t}, x = {x}) is outside the stored window")]
    OutsideWindow { t: f64, x: f64 },
    #[error("data not negligible at the grid boundary ({ratio:.3e} of peak)")]
    BoundaryPollution { ratio: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("fit rejected: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
