use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least {min}, got {got}")]
    InvalidDimension { got: usize, min: usize },
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("grid entry {index} is not finite")]
    NonFiniteGrid { index: usize },
    #[error("expectation value has imaginary residue {residue:e}; basis is corrupted")]
    ImaginaryResidue { residue: f64 },
    #[error("mean variance via trace identity ({trace}) disagrees with direct evaluation ({direct})")]
    VarianceMismatch { trace: f64, direct: f64 },
    #[error("unitarity residual {residue:e} exceeds {limit:e}")]
    UnitarityDrift { residue: f64, limit: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {need} data points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("fit is rank deficient: all abscissae coincide")]
    RankDeficient,
    #[error("value at index {index} must be positive, got {value}")]
    NonPositive { index: usize, value: f64 },
    #[error("profile integrates to {integral}, expected 1; grid too narrow or too coarse")]
    Normalization { integral: f64 },
    #[error("invalid fit window: {0}")]
    InvalidWindow(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not Hermitian (residual {residue:e})")]
    NotHermitian { residue: f64 },
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
