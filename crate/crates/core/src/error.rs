use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("majorana index {index} out of range for {n_qubits} qubits")]
    MajoranaIndex { index: usize, n_qubits: usize },

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("{0} qubits exceeds the dense storage limit")]
    DenseTooLarge(usize),

    #[error("invalid majorana count {0}: must be even and at least 4")]
    InvalidMajoranaCount(usize),

    #[error("sparsity {0} outside (0, 1]")]
    InvalidSparsity(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator does not commute with fermion parity (residual {0:e})")]
    ParityNotConserved(f64),

    #[error("need at least 3 levels for a gap ratio, found {0}")]
    TooFewLevels(usize),

    #[error("gap ratio {0} outside [0, 1]")]
    RatioOutOfRange(f64),

    #[error("inverse temperature must be non-negative, got {0}")]
    NegativeBeta(f64),

    #[error("spectrum carries no eigenvectors")]
    MissingEigenvectors,

    #[error("doubled Hamiltonian is not available in dense form")]
    MissingDenseHamiltonian,

    #[error("eigendecomposition failed to converge")]
    EigenFailure,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid Krylov dimension {m} for space of dimension {dim}")]
    KrylovDimension { m: usize, dim: usize },

    #[error("integrator failure at t={t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("positivity violated: minimum eigenvalue {0:e}")]
    Positivity(f64),

    #[error("undefined statistic: {0}")]
    Undefined(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
