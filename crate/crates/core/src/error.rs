use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register size mismatch: {0} vs {1} qubits")]
    SizeMismatch(usize, usize),
    #[error("spin-orbital index {index} out of range for {n} spin orbitals")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid Pauli string {0:?}")]
    InvalidPauli(String),
    #[error("terms are not qubit-wise commuting: {0} and {1}")]
    NotQubitwiseCommuting(String, String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid active space: {0}")]
    ActiveSpace(String),
    #[error("orbital rotation matrix is not antisymmetric (deviation {0:e})")]
    NotAntisymmetric(f64),
    #[error("expected {expected} parameters, got {got}")]
    ParameterLength { expected: usize, got: usize },
    #[error("measurement cache belongs to another state (fingerprint {cache:016x} vs {state:016x})")]
    FingerprintMismatch { cache: u64, state: u64 },
    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient:e})")]
    NotConverged { iterations: usize, gradient: f64 },
    #[error("singular or ill-conditioned matrix (condition {0:e})")]
    Singular(f64),
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("no valid states to render")]
    EmptySpectrum,
    #[error("shots must be positive")]
    ZeroShots,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
