use thiserror::Error;

/// Errors raised by the gPC algebra, the flux Jacobians and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Newton iteration for the Galerkin root did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The Galerkin root exists only with non-positive realizations; the state sits
    /// on or near the random interface.
    #[error("Galerkin root is not positive (min eigenvalue {min_eigenvalue:e}, min node value {min_node_value:e})")]
    IndefiniteRoot {
        min_eigenvalue: f64,
        min_node_value: f64,
    },

    #[error("matrix is not symmetric positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },

    #[error("velocity operator P(v) is singular (min |eigenvalue| {min_abs_eigenvalue:e})")]
    SingularVelocityOperator { min_abs_eigenvalue: f64 },

    #[error("conservative Jacobian has complex eigenvalues (max |imag| {max_imag:e}); use the capacity form")]
    NonHyperbolic { max_imag: f64 },

    #[error("time step {dt:e} violates the CFL bound {dt_max:e}")]
    CflViolation { dt: f64, dt_max: f64 },

    /// `∇φ_0` vanishes on the listed cells, so the initial norm is not positive.
    #[error("initial gradient vanishes on {} cell(s): {cells:?}", cells.len())]
    DegenerateGradient { cells: Vec<usize> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
