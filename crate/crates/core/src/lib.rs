//! Regularized linear hyperbolic systems with discontinuous coefficients.
//!
//! Coefficients are replaced by ε-families built from moment-vanishing
//! kernels, the resulting smooth mixed problems are solved along
//! characteristics, and the families are compared with classical
//! piecewise solutions in the weak sense.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod embedding;
pub mod error;
pub mod export;
pub mod kernels;
pub mod piecewise;
pub mod quadrature;
pub mod runner;
pub mod solver;
pub mod transmission;

pub use error::{Error, Result};
