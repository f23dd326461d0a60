//! Built-in initial-condition and direction families.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, VectorField};

/// `[16 x(1−x) y(1−y)]²`: C², vanishes with its gradient on ∂Ω, equals 1 at
/// the centre of the square.
pub fn cutoff(x: f64, y: f64) -> f64 {
    let p = 16.0 * x * (1.0 - x) * y * (1.0 - y);
    p * p
}

/// Inverse stereographic projection `(2z₁, 2z₂, |z|² − 1) / (1 + |z|²)`.
pub fn inverse_stereographic(z1: f64, z2: f64) -> [f64; 3] {
    let r2 = z1 * z1 + z2 * z2;
    let s = 1.0 / (1.0 + r2);
    [2.0 * z1 * s, 2.0 * z2 * s, (r2 - 1.0) * s]
}

/// Cutoff sphere of radius `1/H` concentrated at `center` with scale `eps`.
///
/// The sphere is translated so its north pole (the image of `|z| → ∞`) sits
/// at the origin. Without that shift the cutoff would have to bring the
/// constant `e₃/H` down to zero across the whole square, adding
/// `∫|∇φ|²/H²` of Dirichlet energy that does not vanish as `eps → 0`.
/// Translations leave `∫ u · u_x ∧ u_y` unchanged for fields with compact
/// support, so the concentrated limit still carries the full sphere energy.
pub fn bubble(grid: GridSpec, center: [f64; 2], eps: f64, h: f64) -> Result<VectorField> {
    if !(eps > 0.0) || !(h > 0.0) {
        return Err(Error::Domain {
            name: "bubble eps/H",
            value: eps.min(h),
            range: "(0, ∞)",
        });
    }
    VectorField::sample(grid, |x, y| {
        let p = inverse_stereographic((x - center[0]) / eps, (y - center[1]) / eps);
        let c = cutoff(x, y) / h;
        [c * p[0], c * p[1], c * (p[2] - 1.0)]
    })
}

/// `amplitude · sin(pπx) sin(qπy) e_k`.
pub fn eigenmode(grid: GridSpec, modes: [usize; 2], component: usize, amplitude: f64) -> Result<VectorField> {
    if component > 2 || modes[0] == 0 || modes[1] == 0 {
        return Err(Error::Domain {
            name: "eigenmode component/modes",
            value: component as f64,
            range: "component in 0..3, modes ≥ 1",
        });
    }
    let (p, q) = (modes[0] as f64, modes[1] as f64);
    VectorField::sample(grid, |x, y| {
        let s = amplitude * (p * std::f64::consts::PI * x).sin() * (q * std::f64::consts::PI * y).sin();
        let mut v = [0.0; 3];
        v[component] = s;
        v
    })
}

/// Seeded sum of the lowest `modes × modes` sine modes per component with
/// Gaussian coefficients damped like `1/(p+q)`.
pub fn random_bandlimited(grid: GridSpec, seed: u64, modes: usize, amplitude: f64) -> Result<VectorField> {
    if modes == 0 {
        return Err(Error::Domain {
            name: "modes",
            value: 0.0,
            range: "≥ 1",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coef = vec![[0.0; 3]; modes * modes];
    for p in 0..modes {
        for q in 0..modes {
            for c in coef[p * modes + q].iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *c = amplitude * g / (p + q + 2) as f64;
            }
        }
    }
    let n = grid.n();
    let pi = std::f64::consts::PI;
    // separable tables keep sampling O(n² K²) without trig in the inner loop
    let table: Vec<Vec<f64>> = (0..modes)
        .map(|p| (0..n).map(|i| ((p + 1) as f64 * pi * grid.coord(i)).sin()).collect())
        .collect();
    let mut comps = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    for i in 0..n {
        for j in 0..n {
            let idx = grid.index(i, j);
            for p in 0..modes {
                for q in 0..modes {
                    let s = table[p][i] * table[q][j];
                    for k in 0..3 {
                        comps[k][idx] += coef[p * modes + q][k] * s;
                    }
                }
            }
        }
    }
    VectorField::from_components(grid, comps)
}

/// Log-spaced bubble scales from `eps_max` down to `eps_min` inclusive.
pub fn log_scales(eps_max: f64, eps_min: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![eps_max];
    }
    let (a, b) = (eps_max.ln(), eps_min.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Scale grid used for well-depth estimation: `0.25` down to the resolution
/// floor `4h`.
pub fn default_scales(grid: &GridSpec) -> Vec<f64> {
    log_scales(0.25, 4.0 * grid.h(), 10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleSpec {
    pub center: [f64; 2],
    pub eps: f64,
}

pub fn bubble_family(grid: GridSpec, h: f64, center: [f64; 2], scales: &[f64]) -> Result<Vec<(String, VectorField)>> {
    scales
        .iter()
        .map(|&eps| Ok((format!("bubble(eps={eps:.6})"), bubble(grid, center, eps, h)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, triple_integral};

    #[test]
    fn stereographic_lands_on_unit_sphere() {
        for (a, b) in [(0.0, 0.0), (1.0, -2.0), (30.0, 0.1)] {
            let p = inverse_stereographic(a, b);
            let r: f64 = p.iter().map(|v| v * v).sum();
            assert!((r - 1.0).abs() < 1e-14);
        }
        assert_eq!(inverse_stereographic(0.0, 0.0), [0.0, 0.0, -1.0]);
    }

    #[test]
    fn bubble_has_negative_volume_and_zero_boundary_trace() {
        let g = make_grid(31).unwrap();
        let b = bubble(g, [0.5, 0.5], 0.1, 1.0).unwrap();
        assert!(triple_integral(&b) < 0.0);
        // last interior ring is small since φ vanishes to second order
        let edge = b.at(0, 15);
        assert!(edge.iter().all(|v| v.abs() < 0.01));
        assert!(bubble(g, [0.5, 0.5], 0.0, 1.0).is_err());
    }

    #[test]
    fn random_fields_are_seeded() {
        let g = make_grid(15).unwrap();
        let a = random_bandlimited(g, 7, 4, 1.0).unwrap();
        let b = random_bandlimited(g, 7, 4, 1.0).unwrap();
        let c = random_bandlimited(g, 8, 4, 1.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn scales_are_log_spaced_and_inclusive() {
        let s = log_scales(0.25, 1.0 / 32.0, 4);
        assert!((s[0] - 0.25).abs() < 1e-15 && (s[3] - 1.0 / 32.0).abs() < 1e-15);
        assert!((s[1] / s[0] - s[2] / s[1]).abs() < 1e-12);
    }
}
