use thiserror::Error;

use crate::mdp::{QFunction, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("wasserstein order must satisfy p >= 1, got {0}")]
    InvalidOrder(f64),

    #[error("step size at step {step} is {value}, outside (0, 1]")]
    InvalidStepSize { step: u64, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid MDP ({} violation(s)); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidMdp(Vec<Violation>),

    #[error("policy row {state} is not absolutely continuous w.r.t. the reference (KL = +inf)")]
    KlSupport { state: usize },

    #[error("reference policy has empty support at state {state}")]
    EmptySupport { state: usize },

    #[error("linear system is singular")]
    Singular,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<QFunction>,
    },
}

pub(crate) fn check_temperature(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(tau))
    }
}

pub(crate) fn check_tolerance(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(eps))
    }
}

pub(crate) fn mismatch(what: &'static str, expected: impl ToString, got: impl ToString) -> Error {
    Error::DimensionMismatch {
        what,
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
