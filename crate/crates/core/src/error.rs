use thiserror::Error;

use crate::sdp::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has {got} entries, expected {rows}x{cols}")]
    Shape { rows: usize, cols: usize, got: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("trace {trace} is not 1 within tolerance")]
    Trace { trace: f64 },

    #[error("minimum eigenvalue {min_eigenvalue:e} is below the PSD tolerance")]
    NotPositive { min_eigenvalue: f64 },

    #[error("state vector has squared norm {norm_sq}, expected 1")]
    NotNormalized { norm_sq: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {dim} exceeds the limit of this operation ({limit})")]
    DimensionGuard { dim: usize, limit: usize },

    #[error("invalid rank {rank} for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ill-posed conic problem: {0}")]
    IllPosed(String),

    #[error("solver finished with status {status:?} after {iterations} iterations")]
    Solver { status: SolveStatus, iterations: usize },

    #[error("solver cross-check failed: {0}")]
    CrossCheck(String),

    #[error("measurement data is inconsistent with every quantum state: {0}")]
    InfeasibleData(String),

    #[error("no state found after {trials} trials")]
    NotFound { trials: usize },

    #[error("not a coherence witness: {0}")]
    InvalidWitness(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
