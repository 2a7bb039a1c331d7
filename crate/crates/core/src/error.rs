use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("unstable sign choice: even m = {m} requires sigma0 = {required}, got {got}")]
    UnstableSign { m: usize, required: i8, got: i8 },

    #[error("operation requires alpha = 0 (pure model), got alpha = {0:?}")]
    NotPureModel(Vec<f64>),

    #[error("census of {candidates} candidates exceeds the limit of {limit}")]
    CensusTooLarge { candidates: u64, limit: u64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations (n = {n})")]
    NoConvergence { n: usize, iterations: usize },

    #[error("matrix too large for the dense eigensolver: n = {0} (limit 64)")]
    MatrixTooLarge(usize),

    #[error("singular matrix in linear solve")]
    Singular,

    #[error("slow eigenvalue is not separated from the fast ones (tau too large for k): ratio {ratio:.3}")]
    NotSeparated { ratio: f64 },

    #[error("negative time: {0}")]
    NegativeTime(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solver produced non-finite values at t = {time} (dt = {dt})")]
    Instability { time: f64, dt: f64 },

    #[error("while solving with tau = {tau}: {source}")]
    AtTau {
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown preset '{0}' (expected one of heat, kdv, nls, ch, ks-solution, ks-error)")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for numerical failures (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NoConvergence { .. }
            | Error::Singular
            | Error::NotSeparated { .. }
            | Error::Instability { .. } => true,
            Error::AtTau { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
