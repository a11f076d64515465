use thiserror::Error;

use crate::whittle::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("matrix is not Hermitian: entry ({row},{col}) differs from its conjugate mirror by {gap:e}")]
    NotHermitian { row: usize, col: usize, gap: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix dimension {dim} exceeds the configured cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("process is not stable: spectral radius {radius:.6} >= 1")]
    UnstableProcess { radius: f64 },

    #[error("AR polynomial is numerically singular at omega = {omega}")]
    SingularArPolynomial { omega: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("bandwidth m = {m} too large for n = {n} samples (need 2m+1 <= n)")]
    BandwidthTooLarge { m: usize, n: usize },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("matrix is not square: {rows} rows, {cols} columns")]
    NonSquare { rows: usize, cols: usize },

    #[error("weighted matrix is asymmetric at ({row},{col}) beyond tolerance: {gap:e}")]
    AsymmetricBeyondTolerance { row: usize, col: usize, gap: f64 },

    #[error("solver did not converge after {} iterations (KKT residual {:e})", .0.iterations, .0.kkt_residual)]
    NotConverged(Box<SolveReport>),

    #[error("invalid problem: {0}")]
    BadProblem(String),

    #[error("restricted Hessian block is singular")]
    SingularSubHessian,

    #[error("autocovariance tail beyond lag {max_lag} is unknown; lower bounds omega_n >= {omega_lower:e}, l_n >= {l_lower:e}")]
    TailNotComputable { max_lag: usize, omega_lower: f64, l_lower: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Coarse classification used for process exit codes.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::NonSquare { .. }
            | Error::AsymmetricBeyondTolerance { .. }
            | Error::EmptyInput(_)
            | Error::Io(_) => ErrorClass::Data,
            Error::ParameterOutOfRange(_) | Error::BandwidthTooLarge { .. } => ErrorClass::Config,
            _ => ErrorClass::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}
