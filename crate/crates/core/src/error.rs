use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid atomic set: {0}")]
    InvalidSet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sparsity {s} out of range 1..={max}")]
    SparsityOutOfRange { s: usize, max: usize },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solver failure budget exceeded: {0}")]
    SolverBudget(String),

    #[error("experiment refused: {0}")]
    Refused(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI: 2 config, 3 infeasible/refused,
    /// 4 solver budget, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_) => 2,
            Error::Infeasible(_) | Error::Refused(_) => 3,
            Error::SolverBudget(_) => 4,
            _ => 1,
        }
    }
}
