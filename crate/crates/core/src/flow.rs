//! Semi-implicit integration of `u_t = Δu − 2H u_x ∧ u_y` with zero boundary
//! data.
//!
//! Each step solves `(I − Δt Δ_h) w = u − 2 Δt H ∧_h(u)` where `∧_h` is
//! [`wedge_variation`], the exact discrete gradient of the cubic term. The
//! semi-discrete system is therefore the gradient flow of the discrete `E`
//! and the only energy-identity defect is the time discretization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{check_delta, report, FunctionalReport};
use crate::grid::{l2_norm_sq, wedge_variation, GridSpec, VectorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    #[serde(rename = "H")]
    pub h: f64,
    pub dt0: f64,
    pub t_end: f64,
    pub dt_min: f64,
    pub cg_tol: f64,
    pub record_every: usize,
    pub blowup_gradient_factor: f64,
    pub decay_l2_floor: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            h: 1.0,
            dt0: 1e-4,
            t_end: 1.0,
            dt_min: 1e-10,
            cg_tol: 1e-10,
            record_every: 1,
            blowup_gradient_factor: 1e4,
            decay_l2_floor: 1e-16,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, value: f64, range: &'static str| Err(Error::Domain { name, value, range });
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return bad("H", self.h, "[0, ∞)");
        }
        if !(self.dt0 > 0.0 && self.dt0.is_finite()) {
            return bad("dt0", self.dt0, "(0, ∞)");
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt0) {
            return bad("dt_min", self.dt_min, "(0, dt0)");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end", self.t_end, "(0, ∞)");
        }
        if !(self.cg_tol > 0.0 && self.cg_tol <= 1e-6) {
            return bad("cg_tol", self.cg_tol, "(0, 1e-6]");
        }
        if self.record_every == 0 {
            return bad("record_every", 0.0, "≥ 1");
        }
        if !(self.blowup_gradient_factor > 0.0) {
            return bad("blowup_gradient_factor", self.blowup_gradient_factor, "(0, ∞)");
        }
        if !(self.decay_l2_floor > 0.0) {
            return bad("decay_l2_floor", self.decay_l2_floor, "(0, ∞)");
        }
        Ok(())
    }
}

/// Relative-increment guard: a step moving the field by more than this
/// fraction of its L² norm is rejected and retried with half the step.
pub const MAX_RELATIVE_INCREMENT: f64 = 0.1;
/// Accepted steps below this relative increment let `dt` grow back toward `dt0`.
const GROWTH_INCREMENT: f64 = 0.025;

fn apply_helmholtz(grid: &GridSpec, dt: f64, x: &[f64], out: &mut [f64]) {
    let n = grid.n();
    let c = dt / (grid.h() * grid.h());
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let e = if i + 1 < n { x[k + n] } else { 0.0 };
            let w = if i > 0 { x[k - n] } else { 0.0 };
            let no = if j + 1 < n { x[k + 1] } else { 0.0 };
            let s = if j > 0 { x[k - 1] } else { 0.0 };
            out[k] = x[k] - c * (e + w + no + s - 4.0 * x[k]);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients for one lattice; zero initial guess.
fn cg_lattice(grid: &GridSpec, dt: f64, rhs: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let len = rhs.len();
    let mut x = vec![0.0; len];
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; len];
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * b_norm {
            return Ok(x);
        }
        apply_helmholtz(grid, dt, &p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..len {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..len {
            p[k] = r[k] + beta * p[k];
        }
    }
    if rr.sqrt() <= tol * b_norm {
        return Ok(x);
    }
    Err(Error::Solver {
        iterations: max_iter,
        residual: rr.sqrt() / b_norm,
    })
}

/// Solves `(I − dt Δ_h) w = rhs` componentwise to relative residual `cg_tol`.
pub fn solve_helmholtz(rhs: &VectorField, dt: f64, cg_tol: f64) -> Result<VectorField> {
    if !(dt > 0.0) {
        return Err(Error::Domain {
            name: "dt",
            value: dt,
            range: "(0, ∞)",
        });
    }
    let grid = *rhs.grid();
    let max_iter = 10 * grid.len();
    let mut out = VectorField::zeros(grid);
    for k in 0..3 {
        let x = cg_lattice(&grid, dt, rhs.component(k), cg_tol, max_iter)?;
        out.component_mut(k).copy_from_slice(&x);
    }
    Ok(out)
}

/// One semi-implicit step of size `dt`.
pub fn step_imex(u: &VectorField, dt: f64, h: f64, cg_tol: f64) -> Result<VectorField> {
    let rhs = u.axpy(-2.0 * dt * h, &wedge_variation(u))?;
    solve_helmholtz(&rhs, dt, cg_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowupCause {
    DtCollapse,
    GradientThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "cause")]
pub enum RunStatus {
    ReachedHorizon,
    BlowupSuspected(BlowupCause),
    DecayedToZero,
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::ReachedHorizon => "reached-horizon",
            RunStatus::BlowupSuspected(_) => "blowup-suspected",
            RunStatus::DecayedToZero => "decayed-to-zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// Step that produced this sample; zero for the initial datum.
    pub dt: f64,
    pub l2_sq: f64,
    pub h1_sq: f64,
    pub energy: f64,
    pub nehari: f64,
    pub nehari_delta: Vec<f64>,
    /// `∫₀ᵗ |u|₂²`.
    pub f: f64,
    pub fprime: f64,
    pub fsecond: f64,
    /// `f f″ − (3/2) f′²`.
    pub concavity: f64,
    /// Cumulative `Σ |Δt |u_t|₂² + E(t_{k+1}) − E(t_k)|` over accepted steps.
    pub energy_residual: f64,
}

impl Sample {
    fn new(t: f64, dt: f64, r: &FunctionalReport, f: f64, energy_residual: f64) -> Self {
        let fprime = r.l2_sq;
        let fsecond = -2.0 * r.nehari;
        Self {
            t,
            dt,
            l2_sq: r.l2_sq,
            h1_sq: r.dirichlet,
            energy: r.energy,
            nehari: r.nehari,
            nehari_delta: r.nehari_delta.iter().map(|&(_, v)| v).collect(),
            f,
            fprime,
            fsecond,
            concavity: f * fsecond - 1.5 * fprime * fprime,
            energy_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub deltas: Vec<f64>,
    pub samples: Vec<Sample>,
    pub status: RunStatus,
    /// Accepted and rejected step counts.
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl TrajectoryRecord {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("record has at least the initial sample")
    }
}

/// Integrates the flow from `u0`. See [`run_observed`].
pub fn run(u0: &VectorField, p: &FlowParams, deltas: &[f64]) -> Result<TrajectoryRecord> {
    run_observed(u0, p, deltas, |_, _| {})
}

/// Integrates the flow, calling `observer` with every recorded sample and the
/// field it was measured on.
///
/// Stops with `blowup-suspected` when `dt` halves below `dt_min` or `‖u‖²`
/// exceeds `blowup_gradient_factor · max(1, ‖u₀‖²)`, with `decayed-to-zero`
/// when a nonzero datum drops below `decay_l2_floor`, and otherwise at
/// `t_end`.
pub fn run_observed<F>(u0: &VectorField, p: &FlowParams, deltas: &[f64], mut observer: F) -> Result<TrajectoryRecord>
where
    F: FnMut(&Sample, &VectorField),
{
    p.validate()?;
    for &d in deltas {
        check_delta(d)?;
    }
    if !u0.is_finite() {
        return Err(Error::InvalidGrid("initial datum has non-finite entries".into()));
    }

    let mut u = u0.clone();
    let mut rep = report(&u, p.h, deltas)?;
    let h1_0 = rep.dirichlet;
    let l2_0 = rep.l2_sq;
    let gradient_cap = p.blowup_gradient_factor * h1_0.max(1.0);

    let mut t = 0.0;
    let mut f = 0.0;
    let mut residual = 0.0;
    let mut dt = p.dt0;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let first = Sample::new(0.0, 0.0, &rep, 0.0, 0.0);
    observer(&first, &u);
    let mut samples = vec![first];
    let mut last_recorded = 0usize;

    let status = loop {
        let remaining = p.t_end - t;
        if remaining <= 1e-12 * p.t_end {
            break RunStatus::ReachedHorizon;
        }
        let dt_try = dt.min(remaining);
        let l2_u = rep.l2_sq;

        let attempt = step_imex(&u, dt_try, p.h, p.cg_tol).ok().and_then(|w| {
            let inc = l2_norm_sq(&(&w - &u));
            let rel = if l2_u > 0.0 { (inc / l2_u).sqrt() } else { 0.0 };
            (w.is_finite() && rel <= MAX_RELATIVE_INCREMENT).then_some((w, inc, rel))
        });
        let Some((w, inc, rel)) = attempt else {
            rejected += 1;
            dt /= 2.0;
            if dt < p.dt_min {
                break RunStatus::BlowupSuspected(BlowupCause::DtCollapse);
            }
            continue;
        };

        let next = report(&w, p.h, deltas)?;
        // dt |u_t|² with u_t = (w − u)/dt
        residual += (inc / dt_try + next.energy - rep.energy).abs();
        f += dt_try * (l2_u + next.l2_sq) / 2.0;
        t += dt_try;
        u = w;
        rep = next;
        accepted += 1;
        if rel < GROWTH_INCREMENT && dt < p.dt0 {
            dt = (2.0 * dt).min(p.dt0);
        }

        let terminal = if rep.dirichlet > gradient_cap {
            Some(RunStatus::BlowupSuspected(BlowupCause::GradientThreshold))
        } else if l2_0 > 0.0 && rep.l2_sq < p.decay_l2_floor {
            Some(RunStatus::DecayedToZero)
        } else {
            None
        };
        let at_horizon = p.t_end - t <= 1e-12 * p.t_end;
        if terminal.is_some() || at_horizon || accepted.is_multiple_of(p.record_every) {
            let s = Sample::new(t, dt_try, &rep, f, residual);
            observer(&s, &u);
            samples.push(s);
            last_recorded = accepted;
        }
        if let Some(st) = terminal {
            break st;
        }
    };

    if last_recorded != accepted {
        // dt collapse after unrecorded accepted steps: keep the last state
        let s = Sample::new(t, samples.last().map(|s| s.dt).unwrap_or(0.0), &rep, f, residual);
        observer(&s, &u);
        samples.push(s);
    }

    Ok(TrajectoryRecord {
        deltas: deltas.to_vec(),
        samples,
        status,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

/// Energy-identity residual of every recorded interval.
pub fn energy_identity_residuals(tr: &TrajectoryRecord) -> Vec<f64> {
    tr.samples
        .windows(2)
        .map(|w| w[1].energy_residual - w[0].energy_residual)
        .collect()
}
