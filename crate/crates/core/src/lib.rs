//! Stochastic Galerkin solver for random level sets.
//!
//! The random level-set function and its gradient are expanded in an
//! orthonormal Legendre chaos. The Euclidean norm of the gradient is replaced
//! by its Galerkin counterpart, which keeps the resulting system of
//! Hamilton-Jacobi equations hyperbolic. On top of the intrusive solver sit
//! quantile tools for the perturbed level sets and a non-intrusive Monte Carlo
//! reference.

pub mod algebra;
pub mod basis;
pub mod error;
pub mod flux;
pub mod io;
pub mod oracle;
pub mod quantile;
pub mod solver;

pub use algebra::{GpcMatrix, GpcVector};
pub use basis::GpcBasis;
pub use error::{Error, Result};
