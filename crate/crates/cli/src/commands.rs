//! The five subcommands. Each validates its config, computes, and writes its
//! artifacts under `out`.

use std::fs;
use std::path::{Path, PathBuf};

use hflow_core::classify::{
    blowup_report, bounded_sublevel_violations, check_e54, check_sign_persistence, classify_initial, fit_decay_rate,
    gradient_bound_ratio, outcome_consistent, BlowupReport, DecayFit, EnergyRegime, Outcome, SignPersistence, Verdict,
};
use hflow_core::flow::{run, RunStatus, TrajectoryRecord};
use hflow_core::functionals::{a_of_delta, isoperimetric_gap, r_of_delta, report};
use hflow_core::grid::h1_seminorm_sq;
use hflow_core::nehari::{
    d_of_delta, fibering_coeffs, golden_section_max, lambda_star, nehari_points, project_nehari_delta, NehariPoint,
    WellParameters,
};
use hflow_core::{ic, GridSpec, VectorField};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{build_ic, ExperimentConfig, IcConfig, InitialDatum};
use crate::error::{CliError, CliResult};
use crate::output::{trajectory_csv, write_json};

fn prepare(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct WellSummary {
    #[serde(rename = "H")]
    pub h: f64,
    pub d: f64,
    pub best: String,
    pub provenance: String,
}

impl From<&WellParameters> for WellSummary {
    fn from(wp: &WellParameters) -> Self {
        Self {
            h: wp.h,
            d: wp.d,
            best: wp.best_member().label.clone(),
            provenance: wp.provenance.clone(),
        }
    }
}

/// Nehari points of the probe corpus: seeded random directions plus the
/// bubble family.
pub fn probe_points(cfg: &ExperimentConfig, grid: GridSpec) -> CliResult<Vec<NehariPoint>> {
    let c = &cfg.corpus;
    let mut dirs: Vec<VectorField> = (0..c.probe_count as u64)
        .into_par_iter()
        .map(|k| ic::random_bandlimited(grid, c.seed.wrapping_add(k), c.modes, 1.0))
        .collect::<Result<_, _>>()?;
    dirs.extend(cfg.family(grid)?.into_iter().map(|(_, v)| v));
    Ok(nehari_points(cfg.physics.h, &dirs))
}

pub struct Classified {
    pub grid: GridSpec,
    pub wp: WellParameters,
    pub datum: InitialDatum,
    pub verdict: Verdict,
}

pub fn classify(cfg: &ExperimentConfig) -> CliResult<Classified> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let wp = cfg.well_parameters(grid)?;
    let datum = build_ic(cfg, grid, &wp)?;
    let tol = cfg.well.tol_d_rel * wp.d;
    let e = report(&datum.field, cfg.physics.h, &[])?.energy;
    let probe = if e > wp.d + tol {
        Some(probe_points(cfg, grid)?)
    } else {
        None
    };
    let verdict = classify_initial(&datum.field, &wp, tol, probe.as_deref())?;
    Ok(Classified {
        grid,
        wp,
        datum,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
struct ClassifyArtifact<'a> {
    ic: &'a InitialDatum,
    verdict: &'a Verdict,
    well: WellSummary,
}

pub fn cmd_classify(cfg: &ExperimentConfig, out: &Path) -> CliResult<Verdict> {
    let c = classify(cfg)?;
    prepare(out)?;
    write_json(
        &out.join("verdict.json"),
        &ClassifyArtifact {
            ic: &c.datum,
            verdict: &c.verdict,
            well: (&c.wp).into(),
        },
    )?;
    Ok(c.verdict)
}

/// Monitored `δ` values: configured, else three interior points of the
/// invariance window, else a fixed spread.
pub fn monitor_deltas(cfg: &ExperimentConfig, v: &Verdict) -> Vec<f64> {
    if let Some(d) = &cfg.monitors.delta_list {
        return d.clone();
    }
    match (v.details.delta1, v.details.delta2) {
        (Some(a), Some(b)) if b - a > 1e-6 => [0.25, 0.5, 0.75].iter().map(|t| a + t * (b - a)).collect(),
        _ => vec![0.5, 1.0, 1.25],
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub samples: usize,
    pub t_final: f64,
    pub energy_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Monitors {
    pub deltas: Vec<f64>,
    pub sign_persistence: Vec<SignPersistence>,
    pub blowup: BlowupReport,
    pub decay_fit: Option<DecayFit>,
    /// `max ‖u(t)‖² / (6d)`.
    pub gradient_bound_ratio: f64,
    pub outcome_consistent: bool,
    pub energy_nonincreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateArtifact {
    pub ic: InitialDatum,
    pub verdict: Verdict,
    pub well: WellSummary,
    pub run: RunSummary,
    pub monitors: Monitors,
}

pub struct Simulation {
    pub artifact: SimulateArtifact,
    pub trajectory: TrajectoryRecord,
    pub csv: String,
}

/// Classifies, integrates and analyses; writes nothing.
pub fn simulate(cfg: &ExperimentConfig) -> CliResult<Simulation> {
    let Classified { wp, datum, verdict, .. } = classify(cfg)?;
    let deltas = monitor_deltas(cfg, &verdict);
    let p = cfg.flow_params();
    let tr = run(&datum.field, &p, &deltas).map_err(|e| match e {
        hflow_core::Error::Solver { .. } => CliError::Core(e),
        other => CliError::Numerical(other.to_string()),
    })?;
    if tr.samples.iter().any(|s| !s.h1_sq.is_finite() || !s.l2_sq.is_finite()) {
        return Err(CliError::Numerical("non-finite sample in trajectory".into()));
    }
    let decay_fit = match (verdict.expected_outcome, verdict.details.delta1) {
        (Outcome::GlobalDecay, Some(d1)) => fit_decay_rate(&tr, d1, p.decay_l2_floor).ok(),
        _ => None,
    };
    let monitors = Monitors {
        sign_persistence: check_sign_persistence(&tr, &deltas)?,
        deltas,
        blowup: blowup_report(&tr),
        decay_fit,
        gradient_bound_ratio: gradient_bound_ratio(&tr, wp.d),
        outcome_consistent: outcome_consistent(&verdict, &tr),
        energy_nonincreasing: tr.samples.windows(2).all(|w| w[1].energy <= w[0].energy),
    };
    let last = tr.last();
    let run = RunSummary {
        status: tr.status,
        accepted_steps: tr.accepted_steps,
        rejected_steps: tr.rejected_steps,
        samples: tr.samples.len(),
        t_final: last.t,
        energy_residual: last.energy_residual,
    };
    let csv = trajectory_csv(&tr);
    Ok(Simulation {
        artifact: SimulateArtifact {
            ic: datum,
            verdict,
            well: (&wp).into(),
            run,
            monitors,
        },
        trajectory: tr,
        csv,
    })
}

pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> CliResult<Simulation> {
    let sim = simulate(cfg)?;
    prepare(out)?;
    fs::write(out.join("trajectory.csv"), &sim.csv)?;
    write_json(&out.join("verdict.json"), &sim.artifact)?;
    Ok(sim)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaRow {
    pub delta: f64,
    /// `(3 − 2δ) δ² d`.
    pub d_delta: f64,
    /// Energy of the best direction projected onto `D_δ = 0`.
    pub projected: f64,
    /// `a(δ) r(δ)²`.
    pub lower_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WellArtifact {
    pub well: WellParameters,
    pub curve: Vec<DeltaRow>,
    /// `4π / (3H²)`.
    pub sphere_level: f64,
}

pub fn compute_well_depth(cfg: &ExperimentConfig) -> CliResult<WellArtifact> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let wp = cfg.well_parameters(grid)?;
    let c = wp.best_member().coefficients;
    let curve = cfg
        .well
        .delta_grid
        .iter()
        .map(|&delta| {
            let lam = project_nehari_delta(&c, delta)?;
            let r = r_of_delta(delta, wp.h)?;
            Ok(DeltaRow {
                delta,
                d_delta: d_of_delta(delta, wp.d)?,
                projected: c.energy_at(lam),
                lower_bound: a_of_delta(delta)? * r * r,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(WellArtifact {
        sphere_level: 4.0 * std::f64::consts::PI / (3.0 * wp.h * wp.h),
        well: wp,
        curve,
    })
}

pub fn cmd_compute_well_depth(cfg: &ExperimentConfig, out: &Path) -> CliResult<WellArtifact> {
    let w = compute_well_depth(cfg)?;
    prepare(out)?;
    write_json(&out.join("well_depth.json"), &w)?;
    Ok(w)
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    /// Indices (into the corpus or the δ grid) of failing cases.
    pub failures: Vec<usize>,
    /// Smallest normalized margin; negative means violated.
    pub worst_margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub passed: bool,
    pub corpus_size: usize,
    pub grid_n: usize,
    pub seed: u64,
    pub checks: Vec<LemmaCheck>,
    pub warnings: Vec<String>,
}

fn check(name: &str, detail: &str, margins: &[f64]) -> LemmaCheck {
    let failures: Vec<usize> = margins
        .iter()
        .enumerate()
        .filter(|(_, &m)| !(m >= 0.0))
        .map(|(k, _)| k)
        .collect();
    LemmaCheck {
        name: name.into(),
        passed: failures.is_empty(),
        checked: margins.len(),
        failures,
        worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        detail: detail.into(),
    }
}

const ISO_TOL: f64 = 1e-3;
const FIBER_DELTAS: [f64; 4] = [0.25, 0.5, 1.0, 1.25];

/// Runs every lemma checker over the seeded corpus. Failures are part of the
/// report, not errors.
pub fn verify_lemmas(cfg: &ExperimentConfig) -> CliResult<LemmaReport> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let h = cfg.physics.h;
    let c = &cfg.corpus;
    let slack = c.slack;
    let corpus: Vec<VectorField> = (0..c.count as u64)
        .into_par_iter()
        .map(|k| ic::random_bandlimited(grid, c.seed.wrapping_add(k), c.modes, c.amplitude))
        .collect::<Result<_, _>>()?;
    let mut warnings = Vec::new();
    if corpus.is_empty() {
        warnings.push("empty corpus: corpus-based checks pass vacuously".to_string());
    }
    let wp = cfg.well_parameters(grid)?;
    let d = wp.d;
    let mut checks = Vec::new();

    // isoperimetric inequality, scale-free margin gap / A
    // bubbles down to one cell are the near-extremal fields
    let sharp = ic::bubble_family(
        grid,
        h,
        cfg.well.center,
        &ic::log_scales(cfg.well.eps_max, grid.h(), 12),
    )?;
    let iso: Vec<f64> = corpus
        .iter()
        .chain(sharp.iter().map(|(_, v)| v))
        .map(|u| {
            let a = h1_seminorm_sq(u);
            isoperimetric_gap(u) / a + ISO_TOL
        })
        .collect();
    checks.push(check(
        "isoperimetric",
        "∫|∇u|² − (32π)^{1/3}|∫u·u_x∧u_y|^{2/3} ≥ −1e-3·∫|∇u|² on the corpus followed by 12 bubbles down to ε = h",
        &iso,
    ));

    // rays through the corpus, oriented so B < 0
    let rays: Vec<(VectorField, f64)> = corpus
        .iter()
        .filter_map(|u| {
            let v = if fibering_coeffs(u, h).b > 0.0 { -u } else { u.clone() };
            lambda_star(&fibering_coeffs(&v, h)).ok().map(|l| (v, l))
        })
        .collect();

    // sign trichotomy: small norm ⇒ D_δ > 0, and D_δ < 0 ⇒ large norm
    let mut tri = Vec::new();
    for (v, lam) in &rays {
        let cf = fibering_coeffs(v, h);
        for &delta in &FIBER_DELTAS {
            let r = r_of_delta(delta, h)?;
            for s in [0.1, 0.5, 1.0, 2.0] {
                let l = s * lam;
                let norm = l * cf.a.sqrt();
                let dd = cf.nehari_delta_at(l, delta);
                let rr = r * (1.0 - slack);
                let violated = (norm < rr && !(dd > 0.0)) || (dd < 0.0 && !(norm > rr));
                tri.push(if violated { -1.0 } else { 1.0 });
            }
        }
    }
    checks.push(check(
        "nehari-sign-trichotomy",
        "0 < ‖u‖ < r(δ) ⇒ D_δ(u) > 0 and D_δ(u) < 0 ⇒ ‖u‖ > r(δ), with relative slack on r(δ)",
        &tri,
    ));

    // Nehari projections stay outside the ball of radius r(1)
    let r1 = r_of_delta(1.0, h)?;
    let pts = nehari_points(h, &corpus);
    let outside: Vec<f64> = pts.iter().map(|p| p.h1_sq.sqrt() / r1 - (1.0 - slack)).collect();
    checks.push(check("nehari-radius", "‖λ*u‖ ≥ r(1) − slack", &outside));

    // well-depth curve on the best direction
    let best = wp.best_member().coefficients;
    let grid_deltas = &cfg.well.delta_grid;
    let mut curve = Vec::new();
    let mut projected = Vec::new();
    for &delta in grid_deltas {
        let lam = project_nehari_delta(&best, delta)?;
        let e = best.energy_at(lam);
        let model = d_of_delta(delta, d)?;
        let r = r_of_delta(delta, h)?;
        let lower = a_of_delta(delta)? * r * r;
        curve.push(slack - (e - model).abs() / model);
        curve.push(e / lower - (1.0 - slack));
        projected.push((delta, e));
    }
    let peak_at_one = projected
        .iter()
        .all(|&(delta, e)| delta == 1.0 || projected.iter().all(|&(dj, ej)| dj != 1.0 || ej >= e));
    curve.push(if peak_at_one { 1.0 } else { -1.0 });
    checks.push(check(
        "well-depth-curve",
        "projected d(δ) within slack of (3−2δ)δ²d, above a(δ)r(δ)² − slack, maximal at δ = 1",
        &curve,
    ));
    let sphere = 4.0 * std::f64::consts::PI / (3.0 * h * h);
    checks.push(check(
        "well-depth-lower-bound",
        "d ≥ (1 − slack)·4π/(3H²)",
        &[d / sphere - (1.0 - slack)],
    ));

    // fibering map of each ray
    let mut fiber = Vec::new();
    for (v, lam) in &rays {
        let cf = fibering_coeffs(v, h);
        let found = golden_section_max(|l| cf.energy_at(l), 0.0, 4.0 * lam, 1e-10);
        let scale = cf.a * lam * lam;
        fiber.push(1e-6 - (found - lam).abs() / lam);
        fiber.push(cf.nehari_delta_at(0.5 * lam, 1.0) / scale);
        fiber.push(1e-8 - cf.nehari_delta_at(*lam, 1.0).abs() / scale);
        fiber.push(-cf.nehari_delta_at(2.0 * lam, 1.0) / scale);
        let top = cf.energy_at(*lam);
        for s in [0.25, 0.5, 2.0, 4.0] {
            fiber.push((top - cf.energy_at(s * lam)) / top.abs().max(f64::MIN_POSITIVE));
        }
        fiber.push(-cf.energy_at(4.0 * lam));
    }
    checks.push(check(
        "fibering-map",
        "golden-section maximizer matches λ* to 1e-6; D(λ*/2) > 0, D(λ*) ≈ 0, D(2λ*) < 0; E(λ*u) is the fiber maximum; E(4λ*u) < 0",
        &fiber,
    ));

    // E + B/3 = D/2 on the corpus and on every ray point used above
    let mut ident = Vec::new();
    for u in &corpus {
        ident.push(1e-12 - check_e54(u, h)?.identity_residual);
    }
    checks.push(check(
        "energy-volume-identity",
        "E + (H/3)∫u·u_x∧u_y − D/2 = 0 to 1e-12 relative",
        &ident,
    ));

    // ‖u‖² < 6d on Nehari points with energy at most d
    let under: Vec<f64> = pts
        .iter()
        .filter(|p| p.energy <= d)
        .map(|p| 1.0 + slack - p.h1_sq / (6.0 * d))
        .collect();
    checks.push(check(
        "nehari-gradient-bound",
        "‖u‖² ≤ 6d(1 + slack) on Nehari points with E ≤ d",
        &under,
    ));

    // sublevel sets {E < α, D > 0} are bounded by 6α
    let mut sub = Vec::new();
    for alpha in [0.5 * d, d, 2.0 * d] {
        let bad = bounded_sublevel_violations(&corpus, h, alpha)?;
        sub.push(if bad.is_empty() { 1.0 } else { -(bad.len() as f64) });
    }
    checks.push(check(
        "sublevel-bounded",
        "E < α and D > 0 ⇒ ‖u‖² < 6α for α ∈ {d/2, d, 2d}",
        &sub,
    ));

    Ok(LemmaReport {
        passed: checks.iter().all(|c| c.passed),
        corpus_size: corpus.len(),
        grid_n: cfg.grid.n,
        seed: c.seed,
        checks,
        warnings,
    })
}

pub fn cmd_verify_lemmas(cfg: &ExperimentConfig, out: &Path) -> CliResult<LemmaReport> {
    let r = verify_lemmas(cfg)?;
    prepare(out)?;
    write_json(&out.join("lemmas.json"), &r)?;
    if r.passed {
        Ok(r)
    } else {
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Lemmas(failed.join(", ")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub cell: usize,
    pub lambda_multiple: f64,
    pub dir: String,
    pub theorem: Option<String>,
    pub expected_outcome: Option<Outcome>,
    pub energy_regime: Option<EnergyRegime>,
    pub status: Option<RunStatus>,
    pub outcome_consistent: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepIndex {
    pub cells: Vec<SweepCell>,
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> CliResult<SweepIndex> {
    cfg.validate()?;
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: missing `sweep` section".into()))?;
    prepare(out)?;
    let cells: Vec<SweepCell> = sw
        .lambda_multiples
        .par_iter()
        .enumerate()
        .map(|(k, &m)| {
            let dir = format!("cell_{k:03}");
            let mut c = cfg.clone();
            c.sweep = None;
            if let IcConfig::ScaledDirection { lambda_multiple, .. } = &mut c.ic {
                *lambda_multiple = m;
            }
            let path: PathBuf = out.join(&dir);
            let mut cell = SweepCell {
                cell: k,
                lambda_multiple: m,
                dir,
                theorem: None,
                expected_outcome: None,
                energy_regime: None,
                status: None,
                outcome_consistent: None,
                error: None,
            };
            match cmd_simulate(&c, &path) {
                Err(CliError::Io(e)) => return Err(CliError::Io(e)),
                Ok(sim) => {
                    let a = &sim.artifact;
                    cell.theorem = Some(a.verdict.applicable_theorem.id().to_string());
                    cell.expected_outcome = Some(a.verdict.expected_outcome);
                    cell.energy_regime = Some(a.verdict.energy_regime);
                    cell.status = Some(a.run.status);
                    cell.outcome_consistent = Some(a.monitors.outcome_consistent);
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            Ok(cell)
        })
        .collect::<CliResult<_>>()?;
    let index = SweepIndex { cells };
    write_json(&out.join("index.json"), &index)?;
    Ok(index)
}
