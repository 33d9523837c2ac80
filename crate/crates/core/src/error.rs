//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the operator builders, solvers and closed-form evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate steady-state manifold: {0}")]
    Degenerate(String),

    #[error(
        "truncation too small: tail mass {tail_mass:.3e} above {threshold:.1e} at n_max = {n_max}; \
         increase n_max"
    )]
    Truncation {
        n_max: usize,
        tail_mass: f64,
        threshold: f64,
    },

    #[error("steady-state residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    Residual { residual: f64, tol: f64 },

    #[error("density matrix is not positive: smallest eigenvalue {0:.3e}")]
    NotPositive(f64),

    #[error("density matrix invalid: {0}")]
    InvalidState(String),

    #[error("time step rejected: {0}")]
    StepSize(String),

    #[error("argument outside the domain of `{func}`: {value}")]
    Domain { func: &'static str, value: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
