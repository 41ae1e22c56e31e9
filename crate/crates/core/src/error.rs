use num_complex::Complex64;
use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("gamma pole at z = {z}")]
    Pole { z: Complex64 },

    #[error("argument out of range: {0}")]
    Range(String),

    #[error("requested accuracy {requested:.3e} not reached (achieved {achieved:.3e})")]
    Accuracy { requested: f64, achieved: f64 },

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("grid cannot resolve the request: {0}")]
    Resolution(String),

    #[error("non-finite value encountered: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
