//! Potential-well membership, theorem-level verdicts and trajectory checks.
//!
//! Membership is decided against the ordinary well (`δ = 1`):
//!
//! ```text
//! W = { D > 0, E < d } ∪ {0}        V = { D < 0, E < d }
//! ```
//!
//! Data above the depth fall outside both; the high-energy criteria then
//! apply, one exactly checkable (`E ≤ |u|₂ < −B/3`) and one that needs the
//! sampled extremes `λ̂`, `Λ̂` of `|u|₂` over the Nehari manifold and is
//! therefore only heuristic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{RunStatus, TrajectoryRecord};
use crate::functionals::report;
use crate::grid::VectorField;
use crate::nehari::{delta_roots, sample_lambda_big_lambda, NehariPoint, WellParameters};

/// Default half-width of the critical band, relative to `d`.
pub const DEFAULT_TOL_D_REL: f64 = 1e-3;

/// A functional value `v` counts as zero when `|v| ≤ ZERO_REL · ‖u‖²`.
pub const ZERO_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyRegime {
    Low,
    Critical,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Well {
    W,
    V,
    #[serde(rename = "boundary")]
    Boundary,
    #[serde(rename = "outside")]
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "t21")]
    GlobalBelowDepth,
    #[serde(rename = "t22")]
    BlowupBelowDepth,
    #[serde(rename = "t31")]
    GlobalAtDepth,
    #[serde(rename = "t32")]
    BlowupAtDepth,
    #[serde(rename = "t51.1")]
    GlobalAboveDepth,
    #[serde(rename = "t51.2")]
    BlowupAboveDepth,
    #[serde(rename = "t52")]
    BlowupNegativeVolume,
    #[serde(rename = "none")]
    None,
}

impl Theorem {
    pub fn id(&self) -> &'static str {
        match self {
            Theorem::GlobalBelowDepth => "t21",
            Theorem::BlowupBelowDepth => "t22",
            Theorem::GlobalAtDepth => "t31",
            Theorem::BlowupAtDepth => "t32",
            Theorem::GlobalAboveDepth => "t51.1",
            Theorem::BlowupAboveDepth => "t51.2",
            Theorem::BlowupNegativeVolume => "t52",
            Theorem::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    GlobalDecay,
    Blowup,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictDetails {
    pub energy: f64,
    pub nehari: f64,
    pub h1_sq: f64,
    pub l2: f64,
    pub d: f64,
    pub tol_d: f64,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub lambda_hat: Option<f64>,
    pub big_lambda_hat: Option<f64>,
    pub e54: Option<E54Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub energy_regime: EnergyRegime,
    pub well: Well,
    pub applicable_theorem: Theorem,
    pub expected_outcome: Outcome,
    /// Set when the verdict rests on sampled rather than exact quantities.
    pub heuristic: bool,
    pub details: VerdictDetails,
    pub notes: Vec<String>,
}

/// Measured quantities of the negative-volume criterion `E ≤ |u|₂ < −B/3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct E54Check {
    pub satisfied: bool,
    pub energy: f64,
    pub l2: f64,
    /// `−(H/3) ∫ u · u_x ∧ u_y`.
    pub third_volume: f64,
    pub nehari: f64,
    /// `|E + B/3 − D/2|` relative to `max(|E|, |D|/2, |B|/3)`.
    pub identity_residual: f64,
}

pub fn check_e54(u0: &VectorField, h: f64) -> Result<E54Check> {
    let r = report(u0, h, &[])?;
    let b = 1.5 * r.volume;
    let l2 = r.l2_sq.sqrt();
    let third_volume = -b / 3.0;
    let scale = r.energy.abs().max(0.5 * r.nehari.abs()).max(b.abs() / 3.0);
    let residual = (r.energy + b / 3.0 - 0.5 * r.nehari).abs();
    Ok(E54Check {
        satisfied: r.energy <= l2 && l2 < third_volume,
        energy: r.energy,
        l2,
        third_volume,
        nehari: r.nehari,
        identity_residual: if scale > 0.0 { residual / scale } else { 0.0 },
    })
}

/// `(δ₁, δ₂)` for data strictly inside the energy band `(0, d)`.
pub fn delta_window(u0: &VectorField, wp: &WellParameters) -> Result<(f64, f64)> {
    let e = report(u0, wp.h, &[])?.energy;
    if !(e > 0.0 && e < wp.d) {
        return Err(Error::Domain {
            name: "E(u0)",
            value: e,
            range: "(0, d)",
        });
    }
    delta_roots(e, wp.d)
}

/// Classifies an initial datum. `probe` supplies Nehari points for the
/// high-energy sampled criterion; without it that branch is skipped.
pub fn classify_initial(
    u0: &VectorField,
    wp: &WellParameters,
    tol_d: f64,
    probe: Option<&[NehariPoint]>,
) -> Result<Verdict> {
    let r = report(u0, wp.h, &[])?;
    let (e, dn, d) = (r.energy, r.nehari, wp.d);
    let zero_tol = ZERO_REL * r.dirichlet;
    let sign = if dn.abs() <= zero_tol {
        0
    } else if dn > 0.0 {
        1
    } else {
        -1
    };
    let regime = if (e - d).abs() <= tol_d {
        EnergyRegime::Critical
    } else if e < d {
        EnergyRegime::Low
    } else {
        EnergyRegime::High
    };
    let window = if e > 0.0 && e < d { delta_roots(e, d).ok() } else { None };
    let mut v = Verdict {
        energy_regime: regime,
        well: Well::Outside,
        applicable_theorem: Theorem::None,
        expected_outcome: Outcome::Undetermined,
        heuristic: false,
        details: VerdictDetails {
            energy: e,
            nehari: dn,
            h1_sq: r.dirichlet,
            l2: r.l2_sq.sqrt(),
            d,
            tol_d,
            delta1: window.map(|w| w.0),
            delta2: window.map(|w| w.1),
            lambda_hat: None,
            big_lambda_hat: None,
            e54: None,
        },
        notes: Vec::new(),
    };

    if u0.is_zero() {
        v.well = Well::W;
        v.applicable_theorem = Theorem::GlobalBelowDepth;
        v.expected_outcome = Outcome::GlobalDecay;
        return Ok(v);
    }

    match regime {
        EnergyRegime::Low => match sign {
            1 => {
                v.well = Well::W;
                v.applicable_theorem = Theorem::GlobalBelowDepth;
                v.expected_outcome = Outcome::GlobalDecay;
            }
            -1 => {
                v.well = Well::V;
                v.applicable_theorem = Theorem::BlowupBelowDepth;
                v.expected_outcome = Outcome::Blowup;
            }
            _ => {
                v.well = Well::Boundary;
                v.notes
                    .push("D(u0) = 0 with u0 ≠ 0 below the depth; d is likely underestimated".into());
            }
        },
        EnergyRegime::Critical => {
            v.well = Well::Boundary;
            if sign >= 0 {
                v.applicable_theorem = Theorem::GlobalAtDepth;
                v.expected_outcome = Outcome::GlobalDecay;
            } else {
                v.applicable_theorem = Theorem::BlowupAtDepth;
                v.expected_outcome = Outcome::Blowup;
                v.notes
                    .push("critical blow-up uses the hypothesis D(u0) < 0 and the bound 6d".into());
            }
        }
        EnergyRegime::High => {
            let c = check_e54(u0, wp.h)?;
            v.details.e54 = Some(c);
            if c.satisfied {
                v.applicable_theorem = Theorem::BlowupNegativeVolume;
                v.expected_outcome = Outcome::Blowup;
            } else if let Some(points) = probe {
                match sample_lambda_big_lambda(e, d, points) {
                    Ok((lo, hi)) => {
                        v.details.lambda_hat = Some(lo);
                        v.details.big_lambda_hat = Some(hi);
                        let l2 = v.details.l2;
                        if sign > 0 && l2 <= lo {
                            v.applicable_theorem = Theorem::GlobalAboveDepth;
                            v.expected_outcome = Outcome::GlobalDecay;
                            v.heuristic = true;
                        } else if sign < 0 && l2 >= hi {
                            v.applicable_theorem = Theorem::BlowupAboveDepth;
                            v.expected_outcome = Outcome::Blowup;
                            v.heuristic = true;
                        }
                    }
                    Err(err) => v.notes.push(format!("sampled criterion skipped: {err}")),
                }
            }
        }
    }
    Ok(v)
}

/// Whether a finished run agrees with the predicted outcome.
pub fn outcome_consistent(v: &Verdict, tr: &TrajectoryRecord) -> bool {
    match v.expected_outcome {
        Outcome::Undetermined => true,
        Outcome::Blowup => matches!(tr.status, RunStatus::BlowupSuspected(_)),
        Outcome::GlobalDecay => match tr.status {
            RunStatus::DecayedToZero => true,
            RunStatus::ReachedHorizon => tr.samples.windows(2).all(|w| w[1].l2_sq <= w[0].l2_sq),
            RunStatus::BlowupSuspected(_) => false,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPersistence {
    pub delta: f64,
    /// Sign of the first sample that is not numerically zero; 0 if none.
    pub sign: i8,
    pub persistent: bool,
    pub first_violation: Option<usize>,
}

pub fn check_sign_persistence(tr: &TrajectoryRecord, deltas: &[f64]) -> Result<Vec<SignPersistence>> {
    deltas
        .iter()
        .map(|&delta| {
            let k = tr.deltas.iter().position(|&x| x == delta).ok_or(Error::Domain {
                name: "delta",
                value: delta,
                range: "the trajectory's monitored values",
            })?;
            let signs = tr.samples.iter().map(|s| {
                let v = s.nehari_delta[k];
                if v.abs() <= ZERO_REL * s.h1_sq {
                    0i8
                } else if v > 0.0 {
                    1
                } else {
                    -1
                }
            });
            let mut sign = 0;
            let mut first_violation = None;
            for (i, s) in signs.enumerate() {
                if s == 0 {
                    continue;
                }
                if sign == 0 {
                    sign = s;
                } else if s != sign {
                    first_violation = Some(i);
                    break;
                }
            }
            Ok(SignPersistence {
                delta,
                sign,
                persistent: first_violation.is_none(),
                first_violation,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted `−d log|u|₂² / dt`.
    pub rate: f64,
    pub samples_used: usize,
    /// `|u(t)|₂² ≤ |u₀|₂² e^{−2(1−δ₁)t}` at every sample.
    pub bound_satisfied: bool,
    pub first_violation: Option<usize>,
}

pub fn fit_decay_rate(tr: &TrajectoryRecord, delta1: f64, l2_floor: f64) -> Result<DecayFit> {
    let window: Vec<(f64, f64)> = tr
        .samples
        .iter()
        .filter(|s| s.l2_sq > 1e3 * l2_floor)
        .map(|s| (s.t, s.l2_sq.ln()))
        .collect();
    if window.len() < 2 {
        return Err(Error::Fit(format!(
            "{} samples above the decay floor, need 2",
            window.len()
        )));
    }
    let m = window.len() as f64;
    let (st, sy) = window.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let (sxy, sxx) = window.iter().fold((0.0, 0.0), |(a, b), &(t, y)| {
        (a + (t - mt) * (y - my), b + (t - mt) * (t - mt))
    });
    if sxx == 0.0 {
        return Err(Error::Fit("samples share a single time".into()));
    }
    let l0 = tr.first().l2_sq;
    let exponent = -2.0 * (1.0 - delta1);
    let first_violation = tr.samples.iter().position(|s| s.l2_sq > l0 * (exponent * s.t).exp());
    Ok(DecayFit {
        rate: -sxy / sxx,
        samples_used: window.len(),
        bound_satisfied: first_violation.is_none(),
        first_violation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub suspected: bool,
    pub status: RunStatus,
    pub t_last: f64,
    /// Earliest sample from which `f f″ − (3/2) f′² > 0` holds to the end.
    pub concavity_positive_from: Option<usize>,
    pub gradient_max: f64,
}

pub fn blowup_report(tr: &TrajectoryRecord) -> BlowupReport {
    let n = tr.samples.len();
    let tail = tr.samples.iter().rev().take_while(|s| s.concavity > 0.0).count();
    BlowupReport {
        suspected: matches!(tr.status, RunStatus::BlowupSuspected(_)),
        status: tr.status,
        t_last: tr.last().t,
        concavity_positive_from: (tail > 0).then(|| n - tail),
        gradient_max: tr.samples.iter().map(|s| s.h1_sq).fold(0.0, f64::max),
    }
}

/// Largest `‖u(t_k)‖² / (6d)` over a trajectory; below one in the global
/// regime.
pub fn gradient_bound_ratio(tr: &TrajectoryRecord, d: f64) -> f64 {
    tr.samples.iter().map(|s| s.h1_sq / (6.0 * d)).fold(0.0, f64::max)
}

/// Fields with `E < α` and `D > 0` must have `‖u‖² < 6α`; returns the
/// indices that break the bound (empty when all comply).
pub fn bounded_sublevel_violations(fields: &[VectorField], h: f64, alpha: f64) -> Result<Vec<usize>> {
    let mut bad = Vec::new();
    for (k, u) in fields.iter().enumerate() {
        let r = report(u, h, &[])?;
        if r.energy < alpha && r.nehari > 0.0 && r.dirichlet >= 6.0 * alpha {
            bad.push(k);
        }
    }
    Ok(bad)
}
