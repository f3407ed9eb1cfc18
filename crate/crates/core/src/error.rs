use thiserror::Error;

pub type Result<T> = std::result::Result<T, StapError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StapError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid radar configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("snapshot set is empty")]
    EmptySnapshotSet,

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (minimum eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("Toeplitz coefficients are not conjugate-symmetric (violation {0:.3e})")]
    SymmetryViolation(f64),

    #[error("matrix is singular")]
    Singular,

    #[error("SINR loss undefined: w^H R w = 0")]
    UndefinedSinr,
}
