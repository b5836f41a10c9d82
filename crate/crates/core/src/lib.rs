//! Boundary determination of isotropic elastic media from the dynamical
//! Dirichlet-to-Neumann map: symbol factorization, DN symbol calculus,
//! reconstruction of the Lamé parameters and density, the finite-time
//! Laplace bridge and incoming/outgoing splitting.
//!
//! Conventions used throughout: the boundary chart is flat unless a constant
//! [`medium::BoundaryChart`] is supplied, depth `s = x³` increases into the
//! medium, `h = 1/|τ|` and `τ̂ = τ/|τ|`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod calculus;
pub mod error;
pub mod linalg;
pub mod medium;
pub mod reconstruct;
pub mod split;
pub mod symbol;

pub use error::{Error, Result};
