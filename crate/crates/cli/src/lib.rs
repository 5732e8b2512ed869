//! Command-line front end for fitting, simulating and diagnosing GERGMs.
//!
//! Every command is driven by a [`RunManifest`], read from `--manifest` and
//! overridden field by field by command-line flags. Outputs are a pure
//! function of the manifest and seed.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;

pub use args::{Cli, Command};
pub use error::{CliResult, StageError};
pub use manifest::RunManifest;

/// Runs a parsed command line and returns the main report path.
pub fn run(cli: &Cli) -> CliResult<std::path::PathBuf> {
    let (command, manifest) = cli.resolve()?;
    match command {
        Command::Fit(_) => commands::run_fit(&manifest),
        Command::Simulate(_) => commands::run_simulate(&manifest),
        Command::Gof(_) => commands::run_gof(&manifest),
        Command::Hysteresis(_) => commands::run_hysteresis(&manifest),
        Command::Sweep(_) => commands::run_sweep(&manifest),
    }
}
