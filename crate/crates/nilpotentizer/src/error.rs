use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("algebra mismatch: expected dimension {expected}, got {got}")]
    AlgebraMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("flow escaped at time {time:.6} (|y| = {norm:.3e})")]
    FlowEscaped { time: f64, norm: f64 },
    #[error("no convergence detected after {} schedule points", gaps.len() + 1)]
    NoConvergence { gaps: Vec<f64> },
    #[error("not a subalgebra (residual {residual:.3e})")]
    NotSubalgebra { residual: f64 },
    #[error("codimension mismatch: subspace has codimension {got}, expected {expected}")]
    CodimensionMismatch { expected: usize, got: usize },
    #[error("Newton iteration failed (residual {residual:.3e})")]
    NewtonFailed { residual: f64 },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("Hormander condition violated at {point:?} (rank {rank} < {dim})")]
    HormanderViolated { point: Vec<f64>, rank: usize, dim: usize },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
