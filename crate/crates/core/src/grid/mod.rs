//! Uniform grid on the unit square with homogeneous Dirichlet boundary.
//!
//! Fields store interior node values only; every stencil reads the boundary
//! as zero. Node `(i, j)` (0-based) sits at `x = (i + 1) h`, `y = (j + 1) h`.
//!
//! Two Dirichlet forms coexist:
//! - [`gradient`] uses central differences and feeds the cubic volume term.
//! - [`h1_seminorm_sq`] uses forward differences on the zero-padded lattice,
//!   which makes it the exact quadratic form of the 5-point [`laplacian`]
//!   (`∫ Δ_h u · u = -‖u‖²`). It is positive definite on the grid, unlike the
//!   central form, which is blind to the checkerboard mode.

pub mod closed;

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square lattice with `n × n` interior nodes and spacing `h = 1 / (n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    h: f64,
}

pub const MIN_NODES: usize = 3;

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} interior nodes per axis, got {n}"
            )));
        }
        Ok(Self::unchecked(n))
    }

    /// Skips the minimum-size check. Only the tiny hand-checkable grids in
    /// unit tests go below [`MIN_NODES`].
    pub(crate) fn unchecked(n: usize) -> Self {
        assert!(n >= 1);
        Self {
            n,
            h: 1.0 / (n + 1) as f64,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Physical coordinate of the 0-based interior index.
    pub fn coord(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Upper bound on a pointwise difference quotient's squared scale, used
    /// for spectral bounds: the largest 5-point Laplacian eigenvalue.
    pub fn laplacian_spectral_radius(&self) -> f64 {
        let s = (std::f64::consts::PI * self.n as f64 * self.h / 2.0).sin();
        8.0 * s * s / (self.h * self.h)
    }

    /// Discrete eigenvalue of `-Δ_h` for the mode `sin(pπx) sin(qπy)`.
    pub fn laplacian_eigenvalue(&self, p: usize, q: usize) -> f64 {
        let h = self.h;
        let sp = (std::f64::consts::PI * p as f64 * h / 2.0).sin();
        let sq = (std::f64::consts::PI * q as f64 * h / 2.0).sin();
        4.0 / (h * h) * (sp * sp + sq * sq)
    }
}

pub fn make_grid(n: usize) -> Result<GridSpec> {
    GridSpec::new(n)
}

fn check_same(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.n != b.n {
        return Err(Error::GridMismatch { left: a.n, right: b.n });
    }
    Ok(())
}

/// R³-valued field on the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    comps: [Vec<f64>; 3],
}

/// Scalar field on the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn sample<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64,
    {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n {
            for j in 0..grid.n {
                let v = f(grid.coord(i), grid.coord(j));
                if !v.is_finite() {
                    return Err(Error::Sampling { i, j, component: 0 });
                }
                values.push(v);
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let len = grid.len();
        Self {
            grid,
            comps: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    /// Evaluates `f` at every interior node. Whatever `f` does on ∂Ω is
    /// ignored: the boundary is zero by construction.
    pub fn sample<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> [f64; 3],
    {
        let mut out = Self::zeros(grid);
        for i in 0..grid.n {
            let x = grid.coord(i);
            for j in 0..grid.n {
                let v = f(x, grid.coord(j));
                let idx = grid.index(i, j);
                for (k, vk) in v.iter().enumerate() {
                    if !vk.is_finite() {
                        return Err(Error::Sampling { i, j, component: k });
                    }
                    out.comps[k][idx] = *vk;
                }
            }
        }
        Ok(out)
    }

    pub fn from_components(grid: GridSpec, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::InvalidGrid(format!(
                    "component length {} does not match {} nodes",
                    c.len(),
                    grid.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGrid("non-finite entry".into()));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.comps[k]
    }

    pub(crate) fn component_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.comps[k]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn at(&self, i: usize, j: usize) -> [f64; 3] {
        let idx = self.grid.index(i, j);
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|&v| v == 0.0))
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let comps = [0, 1, 2].map(|k| self.comps[k].iter().map(|&v| f(v)).collect());
        Self { grid: self.grid, comps }
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        let comps = [0, 1, 2].map(|k| {
            self.comps[k]
                .iter()
                .zip(&other.comps[k])
                .map(|(&a, &b)| f(a, b))
                .collect()
        });
        Ok(Self { grid: self.grid, comps })
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + s * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.zip(rhs, |a, b| a + b).expect("grid mismatch in add")
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.zip(rhs, |a, b| a - b).expect("grid mismatch in sub")
    }
}

impl Neg for &VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.map(|v| -v)
    }
}

impl Mul<&VectorField> for f64 {
    type Output = VectorField;
    fn mul(self, rhs: &VectorField) -> VectorField {
        rhs.scaled(self)
    }
}

/// Central difference along x (`axis = 0`) or y (`axis = 1`) of one lattice.
fn central_diff(grid: &GridSpec, src: &[f64], axis: usize, dst: &mut [f64]) {
    let n = grid.n;
    let inv = 1.0 / (2.0 * grid.h);
    for i in 0..n {
        for j in 0..n {
            let (fwd, bwd) = if axis == 0 {
                (
                    if i + 1 < n { src[(i + 1) * n + j] } else { 0.0 },
                    if i > 0 { src[(i - 1) * n + j] } else { 0.0 },
                )
            } else {
                (
                    if j + 1 < n { src[i * n + j + 1] } else { 0.0 },
                    if j > 0 { src[i * n + j - 1] } else { 0.0 },
                )
            };
            dst[i * n + j] = (fwd - bwd) * inv;
        }
    }
}

/// Central-difference partial derivative along one axis.
pub fn partial(u: &VectorField, axis: usize) -> VectorField {
    let mut out = VectorField::zeros(u.grid);
    for k in 0..3 {
        central_diff(&u.grid, &u.comps[k], axis, &mut out.comps[k]);
    }
    out
}

/// `(u_x, u_y)` by central differences, reading zeros outside the interior.
pub fn gradient(u: &VectorField) -> (VectorField, VectorField) {
    (partial(u, 0), partial(u, 1))
}

fn laplacian_lattice(grid: &GridSpec, src: &[f64], dst: &mut [f64]) {
    let n = grid.n;
    let inv = 1.0 / (grid.h * grid.h);
    for i in 0..n {
        for j in 0..n {
            let c = src[i * n + j];
            let e = if i + 1 < n { src[(i + 1) * n + j] } else { 0.0 };
            let w = if i > 0 { src[(i - 1) * n + j] } else { 0.0 };
            let no = if j + 1 < n { src[i * n + j + 1] } else { 0.0 };
            let s = if j > 0 { src[i * n + j - 1] } else { 0.0 };
            dst[i * n + j] = (e + w + no + s - 4.0 * c) * inv;
        }
    }
}

/// 5-point Laplacian per component.
pub fn laplacian(u: &VectorField) -> VectorField {
    let mut out = VectorField::zeros(u.grid);
    for k in 0..3 {
        laplacian_lattice(&u.grid, &u.comps[k], &mut out.comps[k]);
    }
    out
}

/// Pointwise cross product.
pub fn wedge(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    check_same(&a.grid, &b.grid)?;
    let mut out = VectorField::zeros(a.grid);
    let [a1, a2, a3] = &a.comps;
    let [b1, b2, b3] = &b.comps;
    for idx in 0..a.grid.len() {
        out.comps[0][idx] = a2[idx] * b3[idx] - a3[idx] * b2[idx];
        out.comps[1][idx] = a3[idx] * b1[idx] - a1[idx] * b3[idx];
        out.comps[2][idx] = a1[idx] * b2[idx] - a2[idx] * b1[idx];
    }
    Ok(out)
}

/// Pointwise R³ inner product.
pub fn dot(a: &VectorField, b: &VectorField) -> Result<ScalarField> {
    check_same(&a.grid, &b.grid)?;
    let values = (0..a.grid.len())
        .map(|idx| (0..3).map(|k| a.comps[k][idx] * b.comps[k][idx]).sum())
        .collect();
    Ok(ScalarField { grid: a.grid, values })
}

/// Interior midpoint-type rule: `h² Σ s_ij`.
pub fn integrate(s: &ScalarField) -> f64 {
    let h = s.grid.h;
    h * h * s.values.iter().sum::<f64>()
}

/// `∫ a · b` without materializing the pointwise product.
pub fn inner(a: &VectorField, b: &VectorField) -> Result<f64> {
    check_same(&a.grid, &b.grid)?;
    let h = a.grid.h;
    let mut acc = 0.0;
    for k in 0..3 {
        acc += a.comps[k].iter().zip(&b.comps[k]).map(|(x, y)| x * y).sum::<f64>();
    }
    Ok(h * h * acc)
}

/// `|u|₂²`.
pub fn l2_norm_sq(u: &VectorField) -> f64 {
    inner(u, u).expect("same grid")
}

/// `‖u‖² = ∫|∇u|²` with forward differences over every cell edge of the
/// zero-padded lattice; equals `-∫ Δ_h u · u` exactly.
pub fn h1_seminorm_sq(u: &VectorField) -> f64 {
    let n = u.grid.n;
    let mut acc = 0.0;
    for c in &u.comps {
        for i in 0..=n {
            for j in 0..n {
                let hi = if i < n { c[i * n + j] } else { 0.0 };
                let lo = if i > 0 { c[(i - 1) * n + j] } else { 0.0 };
                acc += (hi - lo) * (hi - lo);
            }
        }
        for i in 0..n {
            for j in 0..=n {
                let hi = if j < n { c[i * n + j] } else { 0.0 };
                let lo = if j > 0 { c[i * n + j - 1] } else { 0.0 };
                acc += (hi - lo) * (hi - lo);
            }
        }
    }
    // h² · (Δ/h)² collapses to the raw sum of squared jumps
    acc
}

/// `∫ |u_x|² + |u_y|²` with the central-difference gradient.
pub fn h1_seminorm_sq_central(u: &VectorField) -> f64 {
    let (ux, uy) = gradient(u);
    l2_norm_sq(&ux) + l2_norm_sq(&uy)
}

/// Pointwise `u · u_x ∧ u_y` with central-difference derivatives.
pub fn triple_density(u: &VectorField) -> ScalarField {
    let (ux, uy) = gradient(u);
    let w = wedge(&ux, &uy).expect("same grid");
    dot(u, &w).expect("same grid")
}

/// `∫ u · u_x ∧ u_y`.
pub fn triple_integral(u: &VectorField) -> f64 {
    integrate(&triple_density(u))
}

/// Exact gradient of `(1/3) ∫ u · u_x ∧ u_y` (central differences) under the
/// `h²`-weighted pairing:
///
/// ```text
/// (1/3) [ D_x u ∧ D_y u − D_x (D_y u ∧ u) − D_y (u ∧ D_x u) ]
/// ```
///
/// Central differences are skew-adjoint on the zero-padded lattice, so this
/// is the discrete variation; it approximates `u_x ∧ u_y` to second order.
pub fn wedge_variation(u: &VectorField) -> VectorField {
    let (ux, uy) = gradient(u);
    let direct = wedge(&ux, &uy).expect("same grid");
    let px = partial(&wedge(&uy, u).expect("same grid"), 0);
    let py = partial(&wedge(u, &ux).expect("same grid"), 1);
    let mut out = VectorField::zeros(u.grid);
    for k in 0..3 {
        for idx in 0..u.grid.len() {
            out.comps[k][idx] = (direct.comps[k][idx] - px.comps[k][idx] - py.comps[k][idx]) / 3.0;
        }
    }
    out
}
