//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("derivative order {requested} exceeds supported maximum {max}")]
    DerivativeOrder { requested: usize, max: usize },

    #[error("non-finite values detected in {context}")]
    NonFinite { context: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("omega={omega} outside the ground-state existence window ({lo}, {hi})")]
    OutsideWindow { omega: f64, lo: f64, hi: f64 },

    #[error("shooting solver failed to converge: {detail} (bracket history: {history:?})")]
    ShootingFailed { detail: String, history: Vec<(f64, f64)> },

    #[error("modulation system singular: |det|={det:.3e} below threshold {threshold:.3e}")]
    SingularSystem { det: f64, threshold: f64 },

    #[error("operator grid under-resolved: {points_per_length:.1} points per decay length, need {required}")]
    UnderResolved { points_per_length: f64, required: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solution blew up (NaN/Inf) at t={t}")]
    BlowUp { t: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("eigensolve failed: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code class: 1 configuration, 2 numeric, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::Precondition(_) => 1,
            Error::Io(_) => 3,
            _ => 2,
        }
    }
}
