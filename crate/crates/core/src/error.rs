use thiserror::Error;

/// Errors raised by the analysis, synthesis and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("invalid window: {0}")]
    Window(String),

    #[error("lattice offset {offset} outside [0, {stride})")]
    Offset { offset: usize, stride: usize },

    #[error("invalid power spectrum: {0}")]
    Spectrum(String),

    #[error("invalid modulation law: {0}")]
    Modulation(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("covariance is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("covariance has no factorization")]
    Singular,

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
