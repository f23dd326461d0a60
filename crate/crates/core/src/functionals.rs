//! Energy, volume and Nehari functionals of the H-system on discrete fields.
//!
//! With `A = ‖u‖² = ∫|∇u|²` and `T = ∫ u · u_x ∧ u_y`:
//!
//! ```text
//! V_H(u) = (2/3) H T        E(u) = A/2 + V_H(u)
//! D(u)   = A + 2 H T        D_δ(u) = δ A + 2 H T
//! ```
//!
//! `A` is the forward-difference form (see [`crate::grid`]), `T` uses
//! central differences.

use serde::{Deserialize, Serialize};

use crate::error::{check_open, Error, Result};
use crate::grid::{h1_seminorm_sq, l2_norm_sq, triple_integral, VectorField};

/// Upper end of the admissible `δ` range.
pub const DELTA_MAX: f64 = 1.5;

pub fn check_delta(delta: f64) -> Result<()> {
    check_open("delta", delta, 0.0, DELTA_MAX, "(0, 3/2)")
}

pub fn volume_vh(u: &VectorField, h: f64) -> f64 {
    2.0 / 3.0 * h * triple_integral(u)
}

pub fn energy_e(u: &VectorField, h: f64) -> f64 {
    h1_seminorm_sq(u) / 2.0 + volume_vh(u, h)
}

pub fn nehari_d(u: &VectorField, h: f64) -> f64 {
    h1_seminorm_sq(u) + 2.0 * h * triple_integral(u)
}

pub fn nehari_d_delta(u: &VectorField, h: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(delta * h1_seminorm_sq(u) + 2.0 * h * triple_integral(u))
}

fn check_closed_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= DELTA_MAX {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "delta",
            value: delta,
            range: "(0, 3/2]",
        })
    }
}

/// Radius of the ball on which `D_δ > 0`: `2√(2π) δ / H`.
pub fn r_of_delta(delta: f64, h: f64) -> Result<f64> {
    check_closed_delta(delta)?;
    if !(h > 0.0) {
        return Err(Error::Domain {
            name: "H",
            value: h,
            range: "(0, ∞)",
        });
    }
    Ok(2.0 * (2.0 * std::f64::consts::PI).sqrt() * delta / h)
}

/// `1/2 − δ/3`.
pub fn a_of_delta(delta: f64) -> Result<f64> {
    check_closed_delta(delta)?;
    Ok(0.5 - delta / 3.0)
}

/// `(32π)^{1/3}`, the sharp constant of the H-system isoperimetric inequality.
pub fn isoperimetric_constant() -> f64 {
    (32.0 * std::f64::consts::PI).cbrt()
}

/// `∫|∇u|² − (32π)^{1/3} |∫ u · u_x ∧ u_y|^{2/3}`.
pub fn isoperimetric_gap(u: &VectorField) -> f64 {
    let a = h1_seminorm_sq(u);
    let t = triple_integral(u);
    a - isoperimetric_constant() * t.abs().powf(2.0 / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub dirichlet: f64,
    pub volume: f64,
    pub energy: f64,
    pub nehari: f64,
    pub l2_sq: f64,
    /// `(δ, D_δ(u))` for each requested δ.
    pub nehari_delta: Vec<(f64, f64)>,
}

impl FunctionalReport {
    pub fn from_parts(dirichlet: f64, triple: f64, l2_sq: f64, h: f64, deltas: &[f64]) -> Result<Self> {
        let b = h * triple;
        let nehari_delta = deltas
            .iter()
            .map(|&d| check_delta(d).map(|_| (d, d * dirichlet + 2.0 * b)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dirichlet,
            volume: 2.0 / 3.0 * b,
            energy: dirichlet / 2.0 + 2.0 / 3.0 * b,
            nehari: dirichlet + 2.0 * b,
            l2_sq,
            nehari_delta,
        })
    }
}

/// Every functional in one pass over the field.
pub fn report(u: &VectorField, h: f64, deltas: &[f64]) -> Result<FunctionalReport> {
    FunctionalReport::from_parts(h1_seminorm_sq(u), triple_integral(u), l2_norm_sq(u), h, deltas)
}
