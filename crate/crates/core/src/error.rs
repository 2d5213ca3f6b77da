use thiserror::Error;

use crate::ganet::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {0} is outside the domain [0, inf)")]
    Domain(f64),
    #[error("inversion did not converge: {0}")]
    Convergence(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("iterate {iterate} exceeded the overflow guard")]
    Overflow { iterate: usize },
    #[error("gain ({row}, {col}) is not linear")]
    NonLinear { row: usize, col: usize },
    #[error("more than {0} simple cycles")]
    CycleCap(usize),
    #[error("path construction failed: {0}")]
    Path(String),
    #[error("transform failed: {0}")]
    Transform(String),
    #[error("lyapunov setup failed: {0}")]
    Lyapunov(String),
    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },
    #[error("dynamics: {0}")]
    Dynamics(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
