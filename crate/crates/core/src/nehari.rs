//! Fibering maps, Nehari projections and the potential-well depth.
//!
//! Along a ray `λ ↦ λu` every functional is a polynomial in the two
//! coefficients `A = ∫|∇u|²` and `B = H ∫ u · u_x ∧ u_y`:
//!
//! ```text
//! E(λu)   = λ² A / 2 + 2 λ³ B / 3
//! D_δ(λu) = δ λ² A + 2 λ³ B
//! ```
//!
//! For `B < 0` the fiber has a unique interior maximum at `λ* = −A / (2B)`
//! where `D` vanishes, and its height `A³ / (24 B²)` is the mountain-pass
//! level of that direction. The well depth `d` is estimated as the smallest
//! such level over a family of directions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{check_delta, DELTA_MAX};
use crate::grid::closed::ClosedSample;
use crate::grid::{h1_seminorm_sq, l2_norm_sq, triple_integral, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberingCoefficients {
    /// `∫|∇u|²`.
    pub a: f64,
    /// `H ∫ u · u_x ∧ u_y`.
    pub b: f64,
}

impl FiberingCoefficients {
    pub fn energy_at(&self, lambda: f64) -> f64 {
        lambda * lambda * self.a / 2.0 + 2.0 * lambda.powi(3) * self.b / 3.0
    }

    pub fn nehari_delta_at(&self, lambda: f64, delta: f64) -> f64 {
        delta * lambda * lambda * self.a + 2.0 * lambda.powi(3) * self.b
    }

    pub fn from_closed(s: &ClosedSample, h: f64) -> Self {
        Self {
            a: s.dirichlet_integral(),
            b: h * s.triple_integral(),
        }
    }
}

pub fn fibering_coeffs(u: &VectorField, h: f64) -> FiberingCoefficients {
    FiberingCoefficients {
        a: h1_seminorm_sq(u),
        b: h * triple_integral(u),
    }
}

fn check_maximizer(c: &FiberingCoefficients) -> Result<()> {
    if c.a > 0.0 && c.b < 0.0 {
        Ok(())
    } else {
        Err(Error::NoMaximizer { a: c.a, b: c.b })
    }
}

/// Scale of the fiber maximum, where the ray crosses the Nehari manifold.
pub fn lambda_star(c: &FiberingCoefficients) -> Result<f64> {
    check_maximizer(c)?;
    Ok(-c.a / (2.0 * c.b))
}

/// `max_λ E(λu) = A³ / (24 B²)`.
pub fn mountain_pass_energy(c: &FiberingCoefficients) -> Result<f64> {
    check_maximizer(c)?;
    Ok(c.a.powi(3) / (24.0 * c.b * c.b))
}

/// Positive scale with `D_δ(λu) = 0`: `λ(δ) = −δA / (2B)`.
pub fn project_nehari_delta(c: &FiberingCoefficients, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_maximizer(c)?;
    Ok(-delta * c.a / (2.0 * c.b))
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `rel_tol · |x|`.
pub fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..500 {
        if (hi - lo) <= rel_tol * (lo.abs() + hi.abs()) / 2.0 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub label: String,
    pub coefficients: FiberingCoefficients,
    /// `A³/(24B²)`, or `None` when `B ≥ 0`.
    pub pass_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellParameters {
    #[serde(rename = "H")]
    pub h: f64,
    pub d: f64,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub provenance: String,
    /// Index into `family` of the member achieving `d`.
    pub best: usize,
    pub family: Vec<FamilyMember>,
}

impl WellParameters {
    pub fn best_member(&self) -> &FamilyMember {
        &self.family[self.best]
    }

    /// Fills `delta1`/`delta2` for the energy level `e`.
    pub fn with_roots(mut self, e: f64) -> Result<Self> {
        let (a, b) = delta_roots(e, self.d)?;
        self.delta1 = Some(a);
        self.delta2 = Some(b);
        Ok(self)
    }
}

/// Minimum of the mountain-pass level over an ordered family of directions.
/// Ties resolve to the earliest member.
pub fn estimate_d(h: f64, family: &[(String, VectorField)], provenance: &str) -> Result<WellParameters> {
    if family.is_empty() {
        return Err(Error::Estimation("direction family is empty".into()));
    }
    let members: Vec<FamilyMember> = family
        .iter()
        .map(|(label, u)| {
            let c = fibering_coeffs(u, h);
            FamilyMember {
                label: label.clone(),
                coefficients: c,
                pass_energy: mountain_pass_energy(&c).ok(),
            }
        })
        .collect();
    let (best, d) = members
        .iter()
        .enumerate()
        .filter_map(|(k, m)| m.pass_energy.map(|e| (k, e)))
        .fold(None, |acc: Option<(usize, f64)>, (k, e)| match acc {
            Some((_, be)) if be <= e => acc,
            _ => Some((k, e)),
        })
        .ok_or_else(|| Error::Estimation("no direction with B < 0".into()))?;
    Ok(WellParameters {
        h,
        d,
        delta1: None,
        delta2: None,
        provenance: provenance.to_string(),
        best,
        family: members,
    })
}

/// `d(δ) = (3 − 2δ) δ² d`.
pub fn d_of_delta(delta: f64, d: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= DELTA_MAX) {
        return Err(Error::Domain {
            name: "delta",
            value: delta,
            range: "(0, 3/2]",
        });
    }
    if !(d > 0.0) {
        return Err(Error::Domain {
            name: "d",
            value: d,
            range: "(0, ∞)",
        });
    }
    Ok((3.0 - 2.0 * delta) * delta * delta * d)
}

const ROOT_TOL: f64 = 1e-12;
const BRACKET_GAP: f64 = 1e-9;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The two solutions `δ₁ < 1 < δ₂` of `d(δ) = e`; `(1, 1)` at `e = d`.
pub fn delta_roots(e: f64, d: f64) -> Result<(f64, f64)> {
    if !(e > 0.0 && e <= d) {
        return Err(Error::Domain {
            name: "e",
            value: e,
            range: "(0, d]",
        });
    }
    if e == d {
        return Ok((1.0, 1.0));
    }
    let ratio = e / d;
    let g = |delta: f64| (3.0 - 2.0 * delta) * delta * delta - ratio;
    let lo_root = if g(BRACKET_GAP) >= 0.0 {
        BRACKET_GAP
    } else {
        bisect(g, BRACKET_GAP, 1.0)
    };
    let hi_root = if g(DELTA_MAX - BRACKET_GAP) >= 0.0 {
        DELTA_MAX - BRACKET_GAP
    } else {
        bisect(g, 1.0, DELTA_MAX - BRACKET_GAP)
    };
    Ok((lo_root, hi_root))
}

/// A direction projected onto the Nehari manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NehariPoint {
    /// `‖λ*u‖²`.
    pub h1_sq: f64,
    /// `|λ*u|₂`.
    pub l2: f64,
    /// `E(λ*u) = ‖λ*u‖² / 6`.
    pub energy: f64,
}

/// Projects every direction with `B < 0` onto the Nehari manifold. Directions
/// with `B > 0` are flipped first (`B` is odd in `u`).
pub fn nehari_points(h: f64, directions: &[VectorField]) -> Vec<NehariPoint> {
    directions
        .iter()
        .filter_map(|u| {
            let mut c = fibering_coeffs(u, h);
            let sign = if c.b > 0.0 { -1.0 } else { 1.0 };
            c.b *= sign;
            let lam = lambda_star(&c).ok()?;
            Some(NehariPoint {
                h1_sq: lam * lam * c.a,
                l2: lam * l2_norm_sq(u).sqrt(),
                energy: c.energy_at(lam),
            })
        })
        .collect()
}

/// Sampled stand-ins for `λ_α = inf |u|₂` and `Λ_α = sup |u|₂` over the
/// Nehari points with `‖u‖ < √(6α)`.
///
/// These bound the true values from the inside (`λ̂ ≥ λ_α`, `Λ̂ ≤ Λ_α`); they
/// are heuristics, not certified enclosures.
pub fn sample_lambda_big_lambda(alpha: f64, d: f64, points: &[NehariPoint]) -> Result<(f64, f64)> {
    if !(alpha > d) {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            range: "(d, ∞)",
        });
    }
    let bound = 6.0 * alpha;
    let kept: Vec<f64> = points.iter().filter(|p| p.h1_sq < bound).map(|p| p.l2).collect();
    if kept.is_empty() {
        return Err(Error::Estimation(format!(
            "no sampled Nehari point below level {alpha}"
        )));
    }
    let lo = kept.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = kept.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{a_of_delta, energy_e, nehari_d, nehari_d_delta, r_of_delta};
    use crate::grid::make_grid;
    use crate::ic;
    use std::f64::consts::PI;

    fn xy_coeffs(n: usize) -> FiberingCoefficients {
        let s = ClosedSample::sample(make_grid(n).unwrap(), |x, y| [x, y, x * y]).unwrap();
        FiberingCoefficients::from_closed(&s, 1.0)
    }

    #[test]
    fn coefficients_of_polynomial_field() {
        let c = xy_coeffs(63);
        assert!((c.a - 8.0 / 3.0).abs() < 1e-3);
        assert!((c.b + 0.25).abs() < 1e-12);
        // E = 7/6, D = 13/6, D_{3/4} = 3/2
        assert!((c.energy_at(1.0) - 7.0 / 6.0).abs() < 1e-3);
        assert!((c.nehari_delta_at(1.0, 1.0) - 13.0 / 6.0).abs() < 1e-3);
        assert!((c.nehari_delta_at(1.0, 0.75) - 1.5).abs() < 1e-3);
    }

    #[test]
    fn zero_and_scaled_coefficients() {
        let g = make_grid(15).unwrap();
        let z = fibering_coeffs(&VectorField::zeros(g), 1.0);
        assert_eq!((z.a, z.b), (0.0, 0.0));
        let u = ic::bubble(g, [0.5, 0.5], 0.2, 1.0).unwrap();
        let c1 = fibering_coeffs(&u, 1.0);
        let c2 = fibering_coeffs(&u.scaled(2.0), 1.0);
        assert!((c2.a - 4.0 * c1.a).abs() < 1e-12 * c2.a);
        assert!((c2.b - 8.0 * c1.b).abs() < 1e-12 * c2.b.abs());
    }

    #[test]
    fn lambda_star_examples() {
        let c = FiberingCoefficients { a: 1.0, b: -0.5 };
        assert_eq!(lambda_star(&c).unwrap(), 1.0);
        assert!((mountain_pass_energy(&c).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((c.energy_at(1.0) - 1.0 / 6.0).abs() < 1e-15);

        let exact = FiberingCoefficients { a: 8.0 / 3.0, b: -0.25 };
        assert!((lambda_star(&exact).unwrap() - 16.0 / 3.0).abs() < 1e-14);
        assert!((mountain_pass_energy(&exact).unwrap() - 1024.0 / 81.0).abs() < 1e-12);
        let gs = golden_section_max(|l| exact.energy_at(l), 0.0, 20.0, 1e-12);
        assert!((gs - 16.0 / 3.0).abs() < 1e-6);

        assert!(matches!(
            lambda_star(&FiberingCoefficients { a: 1.0, b: 1.0 }),
            Err(Error::NoMaximizer { .. })
        ));
    }

    #[test]
    fn nehari_delta_projection() {
        let c = FiberingCoefficients { a: 8.0 / 3.0, b: -0.25 };
        assert!((project_nehari_delta(&c, 0.5).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        let l1 = project_nehari_delta(&c, 1.0).unwrap();
        assert_eq!(l1, lambda_star(&c).unwrap());
        for delta in [0.25, 0.7, 1.3] {
            let l = project_nehari_delta(&c, delta).unwrap();
            assert!((l / l1 - delta).abs() < 1e-14);
            assert!(c.nehari_delta_at(l, delta).abs() < 1e-12 * c.a * l * l);
            let want = a_of_delta(delta).unwrap() * l * l * c.a;
            assert!((c.energy_at(l) - want).abs() < 1e-12 * want);
        }
        assert!(project_nehari_delta(&c, 1.5).is_err());
    }

    #[test]
    fn fiber_sign_pattern_on_a_field() {
        let g = make_grid(31).unwrap();
        let u = ic::bubble(g, [0.45, 0.55], 0.15, 1.0).unwrap();
        let c = fibering_coeffs(&u, 1.0);
        let ls = lambda_star(&c).unwrap();
        let a_scale = c.a * ls * ls;
        assert!(nehari_d(&u.scaled(0.5 * ls), 1.0) > 0.0);
        assert!(nehari_d(&u.scaled(ls), 1.0).abs() < 1e-10 * a_scale);
        assert!(nehari_d(&u.scaled(2.0 * ls), 1.0) < 0.0);
        let top = energy_e(&u.scaled(ls), 1.0);
        for s in [0.25, 0.5, 2.0, 4.0] {
            assert!(energy_e(&u.scaled(s * ls), 1.0) <= top);
        }
        assert!((energy_e(&u.scaled(4.0 * ls), 1.0) + 80.0 * top).abs() < 1e-9 * top);
        assert!(energy_e(&u.scaled(1e-8), 1.0).abs() < 1e-12);
    }

    #[test]
    fn d_of_delta_examples() {
        let d = 3.0;
        assert_eq!(d_of_delta(1.0, d).unwrap(), d);
        assert_eq!(d_of_delta(1.5, d).unwrap(), 0.0);
        assert!((d_of_delta(0.5, d).unwrap() - d / 2.0).abs() < 1e-15);
        assert!(d_of_delta(0.0, d).is_err());
        assert!(d_of_delta(1.6, d).is_err());
        assert!(d_of_delta(1.0, 0.0).is_err());
        // unimodal with its peak at δ = 1
        let grid: Vec<f64> = (1..150).map(|k| k as f64 / 100.0).collect();
        for w in grid.windows(2) {
            let (a, b) = (d_of_delta(w[0], d).unwrap(), d_of_delta(w[1], d).unwrap());
            if w[1] <= 1.0 {
                assert!(b > a);
            } else if w[0] >= 1.0 {
                assert!(b < a);
            }
        }
    }

    #[test]
    fn roots_of_half_depth() {
        let (a, b) = delta_roots(0.5, 1.0).unwrap();
        assert!((a - 0.5).abs() < 1e-11);
        assert!((b - (1.0 + 3.0_f64.sqrt()) / 2.0).abs() < 1e-11);
        assert_eq!(delta_roots(2.0, 2.0).unwrap(), (1.0, 1.0));
        assert!(delta_roots(0.0, 1.0).is_err());
        assert!(delta_roots(1.1, 1.0).is_err());
        let (a, b) = delta_roots(1e-10, 1.0).unwrap();
        assert!(a < 1e-4 && b > 1.5 - 1e-4);
    }

    #[test]
    fn roots_agree_with_brute_force_scan() {
        for ratio in [0.05, 0.3, 0.77, 0.99] {
            let (a, b) = delta_roots(ratio, 1.0).unwrap();
            // brute-force: sign changes on a fine grid
            let f = |x: f64| (3.0 - 2.0 * x) * x * x - ratio;
            let steps = 1_500_000;
            let mut found = vec![];
            for k in 1..steps {
                let (x0, x1) = (1.5 * (k - 1) as f64 / steps as f64, 1.5 * k as f64 / steps as f64);
                if f(x0).signum() != f(x1).signum() {
                    found.push(0.5 * (x0 + x1));
                }
            }
            assert_eq!(found.len(), 2);
            assert!((found[0] - a).abs() < 1e-6 && (found[1] - b).abs() < 1e-6);
        }
    }

    #[test]
    fn estimate_from_single_polynomial_direction() {
        // the clipped (x, y, xy) field has a boundary layer, so use a cutoff
        // polynomial and compare with its own fiber maximum
        let g = make_grid(31).unwrap();
        let u = VectorField::sample(g, |x, y| {
            let p = ic::cutoff(x, y);
            [p * x, p * y, p * x * y]
        })
        .unwrap();
        let c = fibering_coeffs(&u, 1.0);
        let wp = estimate_d(1.0, &[("poly".into(), u)], "single").unwrap();
        assert_eq!(wp.best, 0);
        assert!((wp.d - c.a.powi(3) / (24.0 * c.b * c.b)).abs() < 1e-12 * wp.d);
    }

    #[test]
    fn estimate_errors() {
        assert!(matches!(estimate_d(1.0, &[], "x"), Err(Error::Estimation(_))));
        let g = make_grid(7).unwrap();
        let flat = ic::eigenmode(g, [1, 1], 0, 1.0).unwrap();
        assert!(matches!(
            estimate_d(1.0, &[("flat".into(), flat)], "x"),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn bubble_family_respects_lower_bound() {
        let g = make_grid(63).unwrap();
        let fam = ic::bubble_family(g, 1.0, [0.5, 0.5], &ic::default_scales(&g)).unwrap();
        let wp = estimate_d(1.0, &fam, "bubbles").unwrap();
        let floor = a_of_delta(1.0).unwrap() * r_of_delta(1.0, 1.0).unwrap().powi(2);
        assert!((floor - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!(wp.d >= 0.98 * floor, "d = {}", wp.d);
        assert!(wp.d <= 1.25 * floor, "d = {}", wp.d);
    }

    #[test]
    fn sampled_lambda_bounds() {
        let g = make_grid(31).unwrap();
        let dirs: Vec<VectorField> = (0..12).map(|s| ic::random_bandlimited(g, s, 3, 1.0).unwrap()).collect();
        let pts = nehari_points(1.0, &dirs);
        assert_eq!(pts.len(), 12);
        for p in &pts {
            assert!((p.h1_sq / 6.0 - p.energy).abs() < 1e-10 * p.energy);
        }
        let d = pts.iter().map(|p| p.energy).fold(f64::INFINITY, f64::min);
        let alpha = 1.01 * d;
        let (lo, hi) = sample_lambda_big_lambda(alpha, d, &pts).unwrap();
        assert!(0.0 < lo && lo <= hi && hi.is_finite());
        let (lo2, hi2) = sample_lambda_big_lambda(2.0 * alpha, d, &pts).unwrap();
        assert!(lo2 <= lo && hi2 >= hi);
        let (a, b) = sample_lambda_big_lambda(alpha, d, &pts[..1]).unwrap_or((1.0, 1.0));
        assert_eq!(a, b);
        assert!(sample_lambda_big_lambda(d, d, &pts).is_err());
        assert!(sample_lambda_big_lambda(1.0000001 * d, d, &[]).is_err());
    }

    #[test]
    fn nehari_delta_vanishes_at_projection_by_direct_evaluation() {
        let g = make_grid(31).unwrap();
        let u = ic::bubble(g, [0.5, 0.5], 0.12, 2.0).unwrap();
        let c = fibering_coeffs(&u, 2.0);
        for delta in [0.3, 1.0, 1.4] {
            let l = project_nehari_delta(&c, delta).unwrap();
            let v = nehari_d_delta(&u.scaled(l), 2.0, delta).unwrap();
            assert!(v.abs() < 1e-10 * c.a * l * l);
        }
    }
}
