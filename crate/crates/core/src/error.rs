use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("moment system singular for q = {q} (pivot {pivot:e}); retry with finer quadrature")]
    SingularMoments { q: usize, pivot: f64 },

    #[error("moment system ill-conditioned for q = {q} (condition number {condition:e})")]
    IllConditioned { q: usize, condition: f64 },

    #[error("kernel moment {k} residual {residual:e} exceeds tolerance {tolerance:e}")]
    MomentResidual { k: usize, residual: f64, tolerance: f64 },

    #[error("function is unbounded or non-finite near x = {x}")]
    Unbounded { x: f64 },

    #[error("non-finite evaluation at epsilon = {epsilon:e}, point ({x}, {t})")]
    NonFinite { epsilon: f64, x: f64, t: f64 },

    #[error("families are defined on different domains")]
    DomainMismatch,

    #[error("characteristic trace exceeded {max_steps} steps")]
    TraceTooLong { max_steps: usize },

    #[error("speed ordering violated at ({x}, {t}): {detail}")]
    SpeedOrdering { x: f64, t: f64, detail: String },

    #[error("CFL condition violated: observed Courant number {courant:.4} > 1")]
    CflViolation { courant: f64 },

    #[error("non-finite solution value in component {component} at node {node}, time step {step}")]
    NonFiniteSolution { component: usize, node: usize, step: usize },

    #[error("fixed-point iteration did not converge in {iterations} iterations (last change {last:e})")]
    NonConvergence { iterations: usize, residuals: Vec<f64>, last: f64 },

    #[error("solution field does not cover the requested region: {0}")]
    NotCovered(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
