//! Configuration, artifacts and experiment commands for the `hflow` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
