use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hflow_cli::commands::{cmd_classify, cmd_compute_well_depth, cmd_simulate, cmd_sweep, cmd_verify_lemmas};
use hflow_cli::{CliError, CliResult, ExperimentConfig};

/// Heat flow of the H-system on the unit square.
///
/// Exit codes: 0 success, 1 config/usage error, 2 numerical failure,
/// 3 lemma-verification failure.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config, or `preset:<name>` for a bundled one
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (defaults to the config's output.path)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides every seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate the flow; writes trajectory.csv and verdict.json
    Simulate,
    /// Classify the initial datum; writes verdict.json
    Classify,
    /// Estimate the well depth and the d(δ) curve; writes well_depth.json
    ComputeWellDepth,
    /// Check the lemmas on a seeded corpus; writes lemmas.json
    VerifyLemmas,
    /// Run a λ-multiple sweep; writes index.json and one directory per cell
    Sweep,
    /// List the bundled presets
    Presets,
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Command::Presets = cli.command {
        for name in hflow_cli::presets::names() {
            println!("{name}");
        }
        return Ok(());
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.path));
    match cli.command {
        Command::Simulate => {
            let sim = cmd_simulate(&cfg, &out)?;
            let a = &sim.artifact;
            println!(
                "{} → {} ({}), status {} at t = {:.6e}",
                a.verdict.applicable_theorem.id(),
                serde_json::to_string(&a.verdict.expected_outcome).unwrap_or_default(),
                serde_json::to_string(&a.verdict.well).unwrap_or_default(),
                a.run.status.label(),
                a.run.t_final
            );
        }
        Command::Classify => {
            let v = cmd_classify(&cfg, &out)?;
            println!(
                "E = {:.6e}, D = {:.6e}, d = {:.6e}: {}",
                v.details.energy,
                v.details.nehari,
                v.details.d,
                v.applicable_theorem.id()
            );
        }
        Command::ComputeWellDepth => {
            let w = cmd_compute_well_depth(&cfg, &out)?;
            println!("d = {:.10} ({})", w.well.d, w.well.best_member().label);
        }
        Command::VerifyLemmas => {
            let r = cmd_verify_lemmas(&cfg, &out);
            // the report is on disk whether or not the checks passed
            let text = std::fs::read_to_string(out.join("lemmas.json")).unwrap_or_default();
            if let Ok(rep) = serde_json::from_str::<serde_json::Value>(&text) {
                for w in rep["warnings"].as_array().into_iter().flatten() {
                    eprintln!("warning: {}", w.as_str().unwrap_or_default());
                }
                for c in rep["checks"].as_array().into_iter().flatten() {
                    let ok = c["passed"].as_bool().unwrap_or(false);
                    println!(
                        "{} {}",
                        if ok { "pass" } else { "FAIL" },
                        c["name"].as_str().unwrap_or("?")
                    );
                }
            }
            r?;
        }
        Command::Sweep => {
            let idx = cmd_sweep(&cfg, &out)?;
            for c in &idx.cells {
                match (&c.status, &c.error) {
                    (Some(s), _) => println!(
                        "{:>8} {} {}",
                        c.lambda_multiple,
                        c.theorem.as_deref().unwrap_or("?"),
                        s.label()
                    ),
                    (_, Some(e)) => println!("{:>8} error: {e}", c.lambda_multiple),
                    _ => {}
                }
            }
        }
        Command::Presets => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
