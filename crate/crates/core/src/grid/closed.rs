//! Evaluation of closed-form fields on the full closed lattice, boundary
//! nodes included, with no clipping.
//!
//! [`VectorField`](super::VectorField) forces zero boundary values, which is
//! right for the flow but turns a field like `(x, y, xy)` into one with an
//! `O(1/h)` boundary layer. Quadrature checks on such fields go through here
//! instead: central differences in the interior, second-order one-sided
//! differences on the boundary, and the composite trapezoid rule.

use super::GridSpec;
use crate::error::{Error, Result};

/// Samples of an R³-valued function on all `(n + 2)²` lattice nodes.
#[derive(Debug, Clone)]
pub struct ClosedSample {
    m: usize,
    h: f64,
    comps: [Vec<f64>; 3],
}

impl ClosedSample {
    pub fn sample<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> [f64; 3],
    {
        let m = grid.n() + 2;
        let h = grid.h();
        let mut comps = [vec![0.0; m * m], vec![0.0; m * m], vec![0.0; m * m]];
        for i in 0..m {
            for j in 0..m {
                let v = f(i as f64 * h, j as f64 * h);
                for k in 0..3 {
                    if !v[k].is_finite() {
                        return Err(Error::Sampling { i, j, component: k });
                    }
                    comps[k][i * m + j] = v[k];
                }
            }
        }
        Ok(Self { m, h, comps })
    }

    fn diff(&self, k: usize, i: usize, j: usize, axis: usize) -> f64 {
        let m = self.m;
        let c = &self.comps[k];
        let at = |a: usize| if axis == 0 { c[a * m + j] } else { c[i * m + a] };
        let p = if axis == 0 { i } else { j };
        if p == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * self.h)
        } else if p == m - 1 {
            (3.0 * at(m - 1) - 4.0 * at(m - 2) + at(m - 3)) / (2.0 * self.h)
        } else {
            (at(p + 1) - at(p - 1)) / (2.0 * self.h)
        }
    }

    fn trapezoid(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        let m = self.m;
        let mut acc = 0.0;
        for i in 0..m {
            let wi = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
            for j in 0..m {
                let wj = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
                acc += wi * wj * f(i, j);
            }
        }
        self.h * self.h * acc
    }

    fn grad_at(&self, i: usize, j: usize) -> ([f64; 3], [f64; 3]) {
        let gx = [0, 1, 2].map(|k| self.diff(k, i, j, 0));
        let gy = [0, 1, 2].map(|k| self.diff(k, i, j, 1));
        (gx, gy)
    }

    /// `∫ |∇u|²`.
    pub fn dirichlet_integral(&self) -> f64 {
        self.trapezoid(|i, j| {
            let (gx, gy) = self.grad_at(i, j);
            gx.iter().chain(gy.iter()).map(|v| v * v).sum()
        })
    }

    /// `∫ u · u_x ∧ u_y`.
    pub fn triple_integral(&self) -> f64 {
        let m = self.m;
        self.trapezoid(|i, j| {
            let (a, b) = self.grad_at(i, j);
            let w = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            (0..3).map(|k| self.comps[k][i * m + j] * w[k]).sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn polynomial_integrals() {
        let g = make_grid(63).unwrap();
        let s = ClosedSample::sample(g, |x, y| [x, y, x * y]).unwrap();
        // differences are exact on quadratics; trapezoid on x² carries h²/6
        let h = g.h();
        assert!((s.dirichlet_integral() - (8.0 / 3.0 + h * h / 3.0)).abs() < 1e-12);
        assert!((s.triple_integral() + 0.25).abs() < 1e-13);
    }
}
