use thiserror::Error;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("length mismatch: {energies} energies but {weights} weights")]
    LengthMismatch { energies: usize, weights: usize },
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("{what} entry {index} is not finite")]
    NonFinite { what: &'static str, index: usize },
    #[error("total weight {total} exceeds 1")]
    WeightOverflow { total: f64 },
    #[error("no populated level left after pruning")]
    NoPopulatedLevel,
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("level {level} outside admissible range [{lo}, {hi}]")]
    LevelOutOfRange { level: f64, lo: f64, hi: f64 },
    #[error("energy width is zero: single-frequency spectrum has no finite crossing density")]
    ZeroEnergyWidth,
    #[error("log-fidelity spread is zero")]
    ZeroSpread,
    #[error("argument {value} outside domain: {reason}")]
    Domain { value: f64, reason: &'static str },
    #[error("invalid bracket [{lo}, {hi}]: endpoint residuals {g_lo} and {g_hi} have the same sign")]
    InvalidBracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid mode {index}: alpha={alpha}, epsilon={epsilon}")]
    InvalidMode { index: usize, alpha: f64, epsilon: f64 },
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("matrix dimension {0} out of supported range")]
    DimensionOutOfRange(usize),
    #[error("eigensolver did not converge for eigenvalue {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },
    #[error("system size L={0} outside supported range")]
    SizeOutOfRange(usize),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NoConvergence { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
