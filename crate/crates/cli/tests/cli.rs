use std::fs;
use std::path::Path;
use std::process::Command;

use hflow_cli::commands::{cmd_simulate, cmd_sweep, compute_well_depth, simulate, verify_lemmas};
use hflow_cli::config::{Direction, IcConfig, SweepConfig};
use hflow_cli::output::parse_trajectory_csv;
use hflow_cli::{presets, CliError, ExperimentConfig};
use hflow_core::classify::{Outcome, Theorem, Well};
use hflow_core::flow::RunStatus;

fn preset(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(presets::get(name).unwrap()).unwrap()
}

fn hflow(args: &[&str], cfg: Option<&Path>, out: &Path) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hflow"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = cfg {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn small(ic: IcConfig) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(r#"{"grid": {"n": 31}}"#).unwrap();
    cfg.ic = ic;
    cfg.time.t_end = 0.02;
    cfg
}

#[test]
fn every_preset_parses_and_validates() {
    for name in presets::names() {
        let cfg = preset(name);
        cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg, "{name} round trip");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");

    assert_eq!(hflow(&["simulate"], None, &out).status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"grid": {"n": 2}}"#).unwrap();
    assert_eq!(hflow(&["simulate"], Some(&bad), &out).status.code(), Some(1));

    fs::write(&bad, r#"{"grid": {"n": 31}, "bogus": 1}"#).unwrap();
    assert_eq!(hflow(&["classify"], Some(&bad), &out).status.code(), Some(1));

    fs::write(&bad, r#"{"grid": {"n": 31}, "well": {"family_size": 0}}"#).unwrap();
    let o = hflow(&["compute-well-depth"], Some(&bad), &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));

    let ok = dir.path().join("ok.json");
    fs::write(&ok, r#"{"grid": {"n": 31}}"#).unwrap();
    assert_eq!(hflow(&["classify"], Some(&ok), &out).status.code(), Some(0));

    assert_eq!(CliError::Lemmas("x".into()).exit_code(), 3);
    assert_eq!(CliError::Numerical("x".into()).exit_code(), 2);
    let solver = hflow_core::Error::Solver {
        iterations: 1,
        residual: 1.0,
    };
    assert_eq!(CliError::from(solver).exit_code(), 2);
}

#[test]
fn seed_flag_fills_and_overrides_random_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("r.json");
    fs::write(
        &cfg,
        r#"{"grid": {"n": 15}, "ic": {"type": "random-bandlimited", "amplitude": 0.1}, "time": {"t_end": 0.001}}"#,
    )
    .unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = hflow(&["simulate", "--seed", seed], Some(&cfg), &out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert_eq!(
        hflow(&["simulate"], Some(&cfg), &dir.path().join("x")).status.code(),
        Some(1)
    );
    let a = run("3", "a");
    assert_eq!(a, run("3", "b"));
    assert_ne!(a, run("4", "c"));
}

#[test]
fn zero_datum_is_in_w_and_stays_zero() {
    let dir = tempfile::tempdir().unwrap();
    let sim = cmd_simulate(&small(IcConfig::Zero), dir.path()).unwrap();
    assert_eq!(sim.artifact.verdict.well, Well::W);
    let parsed = parse_trajectory_csv(&fs::read_to_string(dir.path().join("trajectory.csv")).unwrap()).unwrap();
    // t and dt advance; every field quantity stays zero
    for row in &parsed.rows {
        assert!(row[2..].iter().all(|&v| v == 0.0), "{row:?}");
    }
    let json = fs::read_to_string(dir.path().join("verdict.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["verdict"]["well"], "W");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(!json.contains('\r'));
}

#[test]
fn critical_presets_match_their_verdicts() {
    for (name, theorem) in [("t31", Theorem::GlobalAtDepth), ("t32", Theorem::BlowupAtDepth)] {
        let sim = simulate(&preset(name)).unwrap();
        let a = &sim.artifact;
        assert_eq!(a.verdict.applicable_theorem, theorem, "{name}");
        assert!(a.monitors.outcome_consistent, "{name}: {:?}", a.run.status);
        assert!(a.monitors.energy_nonincreasing, "{name}");
    }
}

#[test]
fn global_runs_respect_the_gradient_bound() {
    let sim = simulate(&preset("t31")).unwrap();
    assert_eq!(sim.artifact.verdict.expected_outcome, Outcome::GlobalDecay);
    assert!(sim.artifact.monitors.gradient_bound_ratio < 1.0);
    assert!(sim.artifact.monitors.decay_fit.as_ref().unwrap().bound_satisfied);
}

#[test]
fn sweep_crosses_from_decay_to_blowup() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("sweep");
    cfg.time.t_end = 0.05;
    let idx = cmd_sweep(&cfg, dir.path()).unwrap();
    let status: Vec<_> = idx.cells.iter().map(|c| c.status.unwrap()).collect();
    assert!(!matches!(status[0], RunStatus::BlowupSuspected(_)));
    assert!(matches!(status[4], RunStatus::BlowupSuspected(_)));
    assert!(idx.cells.iter().all(|c| c.outcome_consistent == Some(true)));
    assert!(dir.path().join("index.json").exists());
    assert!(dir.path().join("cell_004/trajectory.csv").exists());
}

#[test]
fn sweep_cells_are_deterministic_and_match_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("t22");
    cfg.time.t_end = 2e-4;
    cfg.sweep = Some(SweepConfig {
        lambda_multiples: vec![1.6, 1.6],
    });
    cmd_sweep(&cfg, &dir.path().join("sweep")).unwrap();
    let a = fs::read(dir.path().join("sweep/cell_000/trajectory.csv")).unwrap();
    let b = fs::read(dir.path().join("sweep/cell_001/trajectory.csv")).unwrap();
    assert_eq!(a, b);
    cfg.sweep = None;
    cmd_simulate(&cfg, &dir.path().join("single")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("single/trajectory.csv")).unwrap());
    assert_eq!(
        fs::read(dir.path().join("sweep/cell_000/verdict.json")).unwrap(),
        fs::read(dir.path().join("single/verdict.json")).unwrap()
    );
}

#[test]
fn sweep_handles_degenerate_multiples() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(IcConfig::ScaledDirection {
        direction: Direction::Bubble {
            center: [0.5, 0.5],
            eps: 0.1,
        },
        lambda_multiple: 0.1,
    });
    // a zero multiple is the zero datum; NaN is rejected before any cell runs
    cfg.sweep = Some(SweepConfig {
        lambda_multiples: vec![0.1, 0.0],
    });
    let idx = cmd_sweep(&cfg, dir.path()).unwrap();
    assert!(idx.cells.iter().all(|c| c.error.is_none()));
    cfg.sweep = Some(SweepConfig {
        lambda_multiples: vec![f64::NAN],
    });
    assert!(cmd_sweep(&cfg, dir.path()).is_err());
}

#[test]
fn well_depth_scales_as_inverse_h_squared() {
    let mut cfg = preset("well");
    cfg.grid.n = 63;
    let one = compute_well_depth(&cfg).unwrap();
    cfg.physics.h = 2.0;
    let two = compute_well_depth(&cfg).unwrap();
    assert!((one.well.d / two.well.d - 4.0).abs() < 1e-9);
    assert!(two.well.d >= 0.98 * std::f64::consts::PI / 3.0);
    assert!((two.sphere_level - std::f64::consts::PI / 3.0).abs() < 1e-15);
    for row in &one.curve {
        assert!(row.projected >= 0.98 * row.lower_bound);
    }
}

#[test]
fn lemmas_pass_on_the_default_corpus_and_vacuously_on_an_empty_one() {
    let mut cfg = preset("lemmas");
    cfg.grid.n = 63;
    let r = verify_lemmas(&cfg).unwrap();
    assert!(
        r.passed,
        "{:#?}",
        r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()
    );
    cfg.corpus.count = 0;
    let r = verify_lemmas(&cfg).unwrap();
    assert!(r.passed);
    assert!(!r.warnings.is_empty());
}

#[test]
fn high_energy_preset_uses_the_negative_volume_criterion() {
    let mut cfg = preset("t52");
    cfg.time.t_end = 1e-4;
    let sim = simulate(&cfg).unwrap();
    let v = &sim.artifact.verdict;
    assert_eq!(v.applicable_theorem, Theorem::BlowupNegativeVolume);
    assert_eq!(v.well, Well::Outside);
    assert!(v.details.e54.unwrap().satisfied);
}
