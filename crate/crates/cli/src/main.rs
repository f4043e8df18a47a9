//! Command-line front end for the SR-CV-QKD simulator and key-rate toolkit.
//!
//! Subcommands: `keyrate`, `sweep`, `simulate`, `phase-demo`, `calibrate`.
//! Configurations are flat key-value files (or bundled presets by name);
//! every output carries a header echoing the resolved configuration. Exit
//! codes: 0 success, 2 configuration error, 3 numerical-domain error.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;
mod presets;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments or input files (exit code 2).
    Config(String),
    /// The computation left its numerical domain (exit code 3).
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Numerical(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<srcvqkd::Error> for CliError {
    fn from(err: srcvqkd::Error) -> Self {
        use srcvqkd::Error::*;
        match err {
            Numerical(_) | FitFailure(_) | EstimationFailure | AllRoundsDiscarded(_) => {
                CliError::Numerical(err.to_string())
            }
            _ => CliError::Config(err.to_string()),
        }
    }
}

/// Resolves a `--config` argument: an existing file path wins, otherwise a
/// bundled preset name.
pub fn load_config(spec: &str) -> Result<RunConfig, CliError> {
    let path = std::path::Path::new(spec);
    let text = if path.is_file() {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?
    } else if let Some(preset) = presets::get(spec) {
        preset.to_string()
    } else {
        return Err(CliError::Config(format!(
            "`{spec}` is neither a config file nor a preset (presets: {})",
            presets::names().join(", ")
        )));
    };
    RunConfig::parse(&text)
}

#[derive(Parser)]
#[command(
    name = "srcvqkd",
    version,
    about = "Self-referenced CV-QKD simulator and key-rate toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form key-rate report at one operating point
    Keyrate(KeyrateArgs),
    /// Key-rate sweep over transmittance or distance, as CSV
    Sweep(SweepArgs),
    /// Monte-Carlo session with covariance summary and optional record file
    Simulate(SimulateArgs),
    /// Phase-compensation demos: constant signal or constellation
    PhaseDemo(DemoArgs),
    /// Fit a voltage-to-phase EOM calibration curve
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
pub struct KeyrateArgs {
    /// Config file path or preset name
    #[arg(long)]
    config: String,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override protocol.beta
    #[arg(long)]
    beta: Option<f64>,
    /// Override protocol.v_a
    #[arg(long)]
    va: Option<f64>,
    /// xi evaluation variant: bound | exact
    #[arg(long, value_parser = ["bound", "exact"])]
    xi_mode: Option<String>,
    /// xi value for the exact variant
    #[arg(long)]
    xi: Option<f64>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Config file path or preset name
    #[arg(long)]
    config: String,
    /// Output CSV file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Config file path or preset name
    #[arg(long)]
    config: String,
    /// Session record output file (summary always goes to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override session.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override protocol.v_a (0 gives the constant-signal diagnostic)
    #[arg(long)]
    va: Option<f64>,
    /// Override session.n_rounds
    #[arg(long)]
    rounds: Option<usize>,
}

#[derive(Args)]
pub struct DemoArgs {
    /// Config file path or preset name
    #[arg(long)]
    config: String,
    /// Output CSV file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override demo.seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct CalibrateArgs {
    /// Config file path or preset name (synthetic-sweep mode)
    #[arg(long)]
    config: Option<String>,
    /// Measured sweep CSV: voltage,ref_i,ref_q,mod_i,mod_q
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file for the fitted curve (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the (synthetic) sweep samples to this CSV
    #[arg(long)]
    sweep_out: Option<PathBuf>,
    /// Polynomial degree (default: calib.degree or 3)
    #[arg(long)]
    degree: Option<usize>,
    /// Override calib.seed
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Keyrate(args) => commands::keyrate(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::PhaseDemo(args) => commands::phase_demo(args),
        Command::Calibrate(args) => commands::calibrate(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
