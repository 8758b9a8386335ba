//! Command-line front end for the multibeam downlink simulator.
//!
//! Subcommands: `run` (one grid point), `sweep` (full parameter grid
//! with per-point checkpoints and `--resume`), `validate` (load and
//! check a configuration without simulating), and `emit-plots` (flatten
//! results into plot-ready CSV tables).
//!
//! Exit codes: 0 on success, 2 for configuration or parse errors, 3 for
//! simulation errors, 4 for I/O errors.

pub mod commands;
pub mod config;
pub mod plots;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use beamcast_core::error::Error;

/// Multibeam satellite downlink simulator: user clustering, multicast
/// precoding, and rate statistics over Monte Carlo user deployments.
#[derive(Debug, Parser)]
#[command(name = "beamcast", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the single parameter point described by the configuration.
    Run(RunArgs),
    /// Simulate every point of the configured parameter grid.
    Sweep(SweepArgs),
    /// Load and check the configuration, then exit without simulating.
    Validate(ConfigArgs),
    /// Convert results in the output directory into plot-ready CSV tables.
    EmitPlots(EmitPlotsArgs),
}

/// Options shared by every subcommand that loads a configuration.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Configuration file of `key = value` lines (defaults apply if omitted).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set cluster.size=6`. Repeatable;
    /// later overrides win.
    #[arg(long, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Override the master random seed (shorthand for --set run.seed=N).
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,

    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Worker threads for the Monte Carlo iterations; 0 means one per core.
    /// Results are identical for every setting.
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub jobs: usize,

    /// Keep every per-cluster record in the report JSON.
    #[arg(long)]
    pub detail: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,

    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Worker threads for the Monte Carlo iterations; 0 means one per core.
    /// Results are identical for every setting.
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub jobs: usize,

    /// Keep every per-cluster record in the report JSON.
    #[arg(long)]
    pub detail: bool,

    /// Reuse existing per-point JSON files instead of recomputing them.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EmitPlotsArgs {
    /// Directory holding `point_*.json` results; plot CSVs are written there.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

/// Maps an error to the process exit status: configuration and parse
/// problems are 2, I/O problems are 4, everything else (geometry or
/// numerical failures during simulation) is 3.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse { .. } => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn run_cli(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(args) => commands::cmd_run(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
        Command::Validate(args) => commands::cmd_validate(args),
        Command::EmitPlots(args) => plots::cmd_emit_plots(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
