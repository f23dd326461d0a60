//! Numerical laboratory for the heat flow of the constant-mean-curvature
//! H-system `u_t = Δu − 2H u_x ∧ u_y` on the unit square with zero boundary
//! data, organised around its potential-well theory.

pub mod classify;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod grid;
pub mod ic;
pub mod nehari;

pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarField, VectorField};
