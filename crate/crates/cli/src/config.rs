//! Experiment configuration (JSON) and the initial-condition library.

use std::path::Path;

use hflow_core::flow::FlowParams;
use hflow_core::grid::{l2_norm_sq, make_grid};
use hflow_core::nehari::{delta_roots, estimate_d, fibering_coeffs, lambda_star, mountain_pass_energy, WellParameters};
use hflow_core::{ic, GridSpec, VectorField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub ic: IcConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub monitors: MonitorConfig,
    #[serde(default)]
    pub well: WellConfig,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(rename = "H")]
    pub h: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { h: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IcConfig {
    #[default]
    Zero,
    Eigenmode {
        modes: [usize; 2],
        #[serde(default)]
        component: usize,
        amplitude: f64,
    },
    Bubble {
        #[serde(default = "center")]
        center: [f64; 2],
        eps: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    ScaledDirection {
        direction: Direction,
        lambda_multiple: f64,
    },
    RandomBandlimited {
        seed: Option<u64>,
        #[serde(default = "six")]
        modes: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// The point of a ray where `E = energy_multiple · d`, on the rising
    /// (`D > 0`) or falling (`D < 0`) side of the fiber maximum.
    EnergyLevel {
        direction: Direction,
        energy_multiple: f64,
        branch: Branch,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Rising,
    Falling,
}

/// A ray whose fiber maximum `λ*` sets the amplitude unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Direction {
    Bubble {
        #[serde(default = "center")]
        center: [f64; 2],
        eps: f64,
    },
    RandomBandlimited {
        seed: Option<u64>,
        #[serde(default = "six")]
        modes: usize,
    },
    /// The family member that attains the estimated depth.
    WellMinimizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub dt0: f64,
    pub t_end: f64,
    pub dt_min: f64,
    pub cg_tol: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        let p = FlowParams::default();
        Self {
            dt0: p.dt0,
            t_end: p.t_end,
            dt_min: p.dt_min,
            cg_tol: p.cg_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorConfig {
    /// Monitored `δ` values; when absent, three interior points of the
    /// invariance window (or `0.5, 1, 1.25` if there is none).
    pub delta_list: Option<Vec<f64>>,
    pub record_every: usize,
    pub blowup_gradient_factor: f64,
    pub decay_l2_floor: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        let p = FlowParams::default();
        Self {
            delta_list: None,
            record_every: p.record_every,
            blowup_gradient_factor: p.blowup_gradient_factor,
            decay_l2_floor: p.decay_l2_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WellConfig {
    pub center: [f64; 2],
    /// Explicit bubble scales; overrides the log-spaced grid below.
    pub scales: Option<Vec<f64>>,
    pub family_size: usize,
    pub eps_max: f64,
    /// Smallest scale in grid cells.
    pub eps_min_cells: f64,
    pub delta_grid: Vec<f64>,
    /// Half-width of the critical band relative to `d`.
    pub tol_d_rel: f64,
}

impl Default for WellConfig {
    fn default() -> Self {
        Self {
            center: center(),
            scales: None,
            family_size: 10,
            eps_max: 0.25,
            eps_min_cells: 4.0,
            delta_grid: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.45],
            tol_d_rel: hflow_core::classify::DEFAULT_TOL_D_REL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    pub seed: u64,
    pub count: usize,
    pub modes: usize,
    pub amplitude: f64,
    /// Random directions used for the `λ̂`, `Λ̂` estimates.
    pub probe_count: usize,
    /// Relative allowance for discretization error in lemma checks.
    pub slack: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            count: 50,
            modes: 6,
            amplitude: 1.0,
            probe_count: 200,
            slack: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda_multiples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: String,
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: "out".into(),
            format: "csv".into(),
        }
    }
}

fn center() -> [f64; 2] {
    [0.5, 0.5]
}

fn one() -> f64 {
    1.0
}

fn six() -> usize {
    6
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses without validating, so `--seed` can fill in a missing seed
    /// first; every command validates before running.
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| bad(format!("config: {e}")))
    }

    /// Reads a config file, or a bundled preset when `path` is `preset:<name>`.
    pub fn load(path: &Path) -> CliResult<Self> {
        let s = path.to_string_lossy();
        if let Some(name) = s.strip_prefix("preset:") {
            let text = crate::presets::get(name).ok_or_else(|| bad(format!("unknown preset {name:?}")))?;
            return Self::from_json(text);
        }
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.grid.n < 3 {
            return Err(bad("grid.n must be at least 3"));
        }
        if !(self.physics.h > 0.0 && self.physics.h.is_finite()) {
            return Err(bad("physics.H must be positive"));
        }
        self.flow_params().validate().map_err(|e| bad(e.to_string()))?;
        if let Some(ds) = &self.monitors.delta_list {
            for &d in ds {
                hflow_core::functionals::check_delta(d).map_err(|e| bad(e.to_string()))?;
            }
        }
        if self
            .well
            .scales
            .as_ref()
            .map_or(self.well.family_size == 0, |s| s.is_empty())
        {
            return Err(bad("well: the direction family is empty"));
        }
        if !(self.well.tol_d_rel >= 0.0) {
            return Err(bad("well.tol_d_rel must be non-negative"));
        }
        if self.output.format != "csv" {
            return Err(bad(format!(
                "output.format {:?} unsupported (only \"csv\")",
                self.output.format
            )));
        }
        if let Some(sw) = &self.sweep {
            if !matches!(self.ic, IcConfig::ScaledDirection { .. }) {
                return Err(bad("sweep.lambda_multiples needs a scaled-direction ic"));
            }
            if sw.lambda_multiples.iter().any(|m| !m.is_finite()) {
                return Err(bad("sweep.lambda_multiples must be finite"));
            }
        }
        match &self.ic {
            IcConfig::RandomBandlimited { seed: None, .. }
            | IcConfig::ScaledDirection {
                direction: Direction::RandomBandlimited { seed: None, .. },
                ..
            }
            | IcConfig::EnergyLevel {
                direction: Direction::RandomBandlimited { seed: None, .. },
                ..
            } => Err(bad("random initial data need a seed (config or --seed)")),
            _ => Ok(()),
        }
    }

    /// `--seed`: replaces every seed in the config.
    pub fn override_seed(&mut self, seed: u64) {
        self.corpus.seed = seed;
        match &mut self.ic {
            IcConfig::RandomBandlimited { seed: s, .. }
            | IcConfig::ScaledDirection {
                direction: Direction::RandomBandlimited { seed: s, .. },
                ..
            }
            | IcConfig::EnergyLevel {
                direction: Direction::RandomBandlimited { seed: s, .. },
                ..
            } => *s = Some(seed),
            _ => {}
        }
    }

    pub fn grid_spec(&self) -> CliResult<GridSpec> {
        Ok(make_grid(self.grid.n)?)
    }

    pub fn flow_params(&self) -> FlowParams {
        FlowParams {
            h: self.physics.h,
            dt0: self.time.dt0,
            t_end: self.time.t_end,
            dt_min: self.time.dt_min,
            cg_tol: self.time.cg_tol,
            record_every: self.monitors.record_every,
            blowup_gradient_factor: self.monitors.blowup_gradient_factor,
            decay_l2_floor: self.monitors.decay_l2_floor,
        }
    }

    pub fn scales(&self, grid: &GridSpec) -> Vec<f64> {
        match &self.well.scales {
            Some(s) => s.clone(),
            None => ic::log_scales(
                self.well.eps_max,
                self.well.eps_min_cells * grid.h(),
                self.well.family_size,
            ),
        }
    }

    pub fn family(&self, grid: GridSpec) -> CliResult<Vec<(String, VectorField)>> {
        Ok(ic::bubble_family(
            grid,
            self.physics.h,
            self.well.center,
            &self.scales(&grid),
        )?)
    }

    pub fn well_parameters(&self, grid: GridSpec) -> CliResult<WellParameters> {
        let family = self.family(grid)?;
        let provenance = format!("bubble family, n = {}, {} scales", self.grid.n, family.len());
        Ok(estimate_d(self.physics.h, &family, &provenance)?)
    }
}

/// A built initial datum and how it was obtained.
#[derive(Debug, Clone, Serialize)]
pub struct InitialDatum {
    #[serde(skip)]
    pub field: VectorField,
    pub description: String,
    /// `λ*` of the direction for scaled-direction data.
    pub lambda_star: Option<f64>,
    pub l2: f64,
}

/// A direction oriented so that `B < 0`, its label and its `λ*`.
fn ray(
    cfg: &ExperimentConfig,
    grid: GridSpec,
    wp: &WellParameters,
    direction: &Direction,
) -> CliResult<(VectorField, String, f64)> {
    let h = cfg.physics.h;
    let (mut v, label) = match direction {
        Direction::Bubble { center, eps } => (
            ic::bubble(grid, *center, *eps, h)?,
            format!("bubble eps {eps} at {center:?}"),
        ),
        Direction::RandomBandlimited { seed, modes } => {
            let seed = seed.ok_or_else(|| bad("random direction needs a seed"))?;
            (
                ic::random_bandlimited(grid, seed, *modes, 1.0)?,
                format!("random band-limited seed {seed} modes {modes}"),
            )
        }
        Direction::WellMinimizer => {
            let label = wp.best_member().label.clone();
            let v = cfg
                .family(grid)?
                .into_iter()
                .find(|(l, _)| *l == label)
                .map(|(_, v)| v)
                .ok_or_else(|| bad("well minimizer not in family"))?;
            (v, format!("well minimizer {label}"))
        }
    };
    // B is odd in u: flip so the ray has a fiber maximum
    if fibering_coeffs(&v, h).b > 0.0 {
        v = -&v;
    }
    let lam = lambda_star(&fibering_coeffs(&v, h))?;
    Ok((v, label, lam))
}

pub fn build_ic(cfg: &ExperimentConfig, grid: GridSpec, wp: &WellParameters) -> CliResult<InitialDatum> {
    let h = cfg.physics.h;
    let (field, description, lambda_star) = match &cfg.ic {
        IcConfig::Zero => (VectorField::zeros(grid), "zero".to_string(), None),
        IcConfig::Eigenmode {
            modes,
            component,
            amplitude,
        } => (
            ic::eigenmode(grid, *modes, *component, *amplitude)?,
            format!("eigenmode {modes:?} component {component} × {amplitude}"),
            None,
        ),
        IcConfig::Bubble { center, eps, amplitude } => (
            *amplitude * &ic::bubble(grid, *center, *eps, h)?,
            format!("bubble eps {eps} at {center:?} × {amplitude}"),
            None,
        ),
        IcConfig::RandomBandlimited { seed, modes, amplitude } => {
            let seed = seed.ok_or_else(|| bad("random initial data need a seed"))?;
            (
                ic::random_bandlimited(grid, seed, *modes, *amplitude)?,
                format!("random band-limited seed {seed} modes {modes} × {amplitude}"),
                None,
            )
        }
        IcConfig::ScaledDirection {
            direction,
            lambda_multiple,
        } => {
            let (v, label, lam) = ray(cfg, grid, wp, direction)?;
            (
                (lambda_multiple * lam) * &v,
                format!("{lambda_multiple} λ* along {label}"),
                Some(lam),
            )
        }
        IcConfig::EnergyLevel {
            direction,
            energy_multiple,
            branch,
        } => {
            let (v, label, lam) = ray(cfg, grid, wp, direction)?;
            let pass = mountain_pass_energy(&fibering_coeffs(&v, h))?;
            let target = energy_multiple * wp.d;
            // E(sλ*u) = (3 − 2s) s² · E(λ*u), the same cubic as d(δ)/d
            let (rising, falling) = delta_roots(target, pass).map_err(|_| {
                bad(format!(
                    "energy {target} is not reachable on a ray whose fiber maximum is {pass}"
                ))
            })?;
            let (s, side) = match branch {
                Branch::Rising => (rising, "rising"),
                Branch::Falling => (falling, "falling"),
            };
            (
                (s * lam) * &v,
                format!("E = {energy_multiple} d on the {side} side of {label} ({s} λ*)"),
                Some(lam),
            )
        }
    };
    let l2 = l2_norm_sq(&field).sqrt();
    Ok(InitialDatum {
        field,
        description,
        lambda_star,
        l2,
    })
}
