//! WebAssembly bindings behind `www/index.html`.
//!
//! Every array crosses the boundary as a flat `Float64Array`; pairs and
//! triples are interleaved.

use hflow_core::flow::step_imex;
use hflow_core::functionals::{a_of_delta, report};
use hflow_core::grid::{l2_norm_sq, make_grid};
use hflow_core::nehari::{d_of_delta, estimate_d, fibering_coeffs, lambda_star, mountain_pass_energy};
use hflow_core::{ic, VectorField};
use wasm_bindgen::prelude::*;

fn js(e: hflow_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn ray(n: usize, eps: f64, h: f64) -> Result<VectorField, hflow_core::Error> {
    ic::bubble(make_grid(n)?, [0.5, 0.5], eps, h)
}

/// `E(λu)` for the bubble of scale `eps`, sampled on `[0, 2λ*]`:
/// `[λ*, E(λ*u), λ₀, E₀, λ₁, E₁, …]`.
#[wasm_bindgen]
pub fn fiber_curve(n: usize, eps: f64, h: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let c = fibering_coeffs(&ray(n, eps, h).map_err(js)?, h);
    let lam = lambda_star(&c).map_err(js)?;
    let mut out = vec![lam, mountain_pass_energy(&c).map_err(js)?];
    let m = points.max(2);
    for k in 0..m {
        let l = 2.0 * lam * k as f64 / (m - 1) as f64;
        out.extend([l, c.energy_at(l)]);
    }
    Ok(out)
}

/// Well depth from the bubble family and the curve `d(δ)` with its lower
/// bound `a(δ)r(δ)²`: `[d, δ₀, d(δ₀), low₀, …]`.
#[wasm_bindgen]
pub fn well_curve(n: usize, h: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let g = make_grid(n).map_err(js)?;
    let fam = ic::bubble_family(g, h, [0.5, 0.5], &ic::default_scales(&g)).map_err(js)?;
    let d = estimate_d(h, &fam, "bubble family").map_err(js)?.d;
    let mut out = vec![d];
    let m = points.max(2);
    for k in 0..m {
        // open at both ends of (0, 3/2]
        let delta = 1.5 * (k as f64 + 0.5) / m as f64;
        let r = 2.0 * (2.0 * std::f64::consts::PI).sqrt() * delta / h;
        out.extend([
            delta,
            d_of_delta(delta, d).map_err(js)?,
            a_of_delta(delta).map_err(js)? * r * r,
        ]);
    }
    Ok(out)
}

/// A running flow from `multiple · λ*` times a bubble.
#[wasm_bindgen]
pub struct Flow {
    u: VectorField,
    h: f64,
    dt: f64,
    dt_min: f64,
    t: f64,
    h1_cap: f64,
    l2_floor: f64,
    status: &'static str,
}

const MAX_RELATIVE_INCREMENT: f64 = 0.1;

#[wasm_bindgen]
impl Flow {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, eps: f64, h: f64, multiple: f64, dt: f64) -> Result<Flow, JsError> {
        let v = ray(n, eps, h).map_err(js)?;
        let lam = lambda_star(&fibering_coeffs(&v, h)).map_err(js)?;
        let u = (multiple * lam) * &v;
        let h1 = report(&u, h, &[]).map_err(js)?.dirichlet;
        Ok(Flow {
            u,
            h,
            dt,
            dt_min: dt * 1e-6,
            t: 0.0,
            h1_cap: 1e4 * h1.max(1.0),
            l2_floor: 1e-16,
            status: "running",
        })
    }

    /// Takes up to `steps` accepted steps, halving `dt` on rejection; returns
    /// `running`, `blowup-suspected` or `decayed-to-zero`.
    pub fn advance(&mut self, steps: usize) -> Result<String, JsError> {
        let mut done = 0;
        while done < steps && self.status == "running" {
            let w = step_imex(&self.u, self.dt, self.h, 1e-10).ok().filter(|w| {
                let l2 = l2_norm_sq(&self.u);
                w.is_finite() && (l2 == 0.0 || (l2_norm_sq(&(w - &self.u)) / l2).sqrt() <= MAX_RELATIVE_INCREMENT)
            });
            match w {
                Some(w) => {
                    self.u = w;
                    self.t += self.dt;
                    done += 1;
                    let r = report(&self.u, self.h, &[]).map_err(js)?;
                    if r.dirichlet > self.h1_cap {
                        self.status = "blowup-suspected";
                    } else if r.l2_sq < self.l2_floor {
                        self.status = "decayed-to-zero";
                    }
                }
                None => {
                    self.dt /= 2.0;
                    if self.dt < self.dt_min {
                        self.status = "blowup-suspected";
                    }
                }
            }
        }
        Ok(self.status.to_string())
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `[E, D, ‖u‖², |u|₂²]`.
    pub fn functionals(&self) -> Result<Vec<f64>, JsError> {
        let r = report(&self.u, self.h, &[]).map_err(js)?;
        Ok(vec![r.energy, r.nehari, r.dirichlet, r.l2_sq])
    }

    /// `|u|` at the interior nodes, row-major (`x` slowest).
    pub fn magnitude(&self) -> Vec<f64> {
        let [a, b, c] = self.u.components();
        a.iter()
            .zip(b)
            .zip(c)
            .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
            .collect()
    }

    pub fn size(&self) -> usize {
        self.u.grid().n()
    }
}
