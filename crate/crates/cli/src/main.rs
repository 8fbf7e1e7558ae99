//! Command-line driver for the fault-recovery toolkit: dataset
//! generation, MLP training and evaluation against nearest-neighbor
//! baselines, empirical stability estimation, and quadrature checks.
//!
//! Exit codes: 0 on success, 2 on usage or configuration errors, 3 on
//! numerical failures (divergence, degenerate spectra, and the like).

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd_eval;
mod cmd_gen;
mod cmd_quadcheck;
mod cmd_report;
mod cmd_stability;
mod cmd_train;
mod config;
mod svg;

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file, or input files: exit code 2.
    Usage(String),
    /// The computation itself failed: exit code 3.
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Numerical(msg) => f.write_str(msg),
        }
    }
}

/// Wrap an input or configuration failure.
pub(crate) fn usage<E: fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

/// Wrap a failure of the computation itself.
pub(crate) fn numerical<E: fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "faultstab",
    version,
    about = "Recover fault-plane parameters from surface data: datasets, stability probes, regressors"
)]
struct Cli {
    /// TOML config file; command-line flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: $FAULTSTAB_OUT_DIR, then `.`)
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset of normalized surface measurements
    Gen(cmd_gen::GenArgs),
    /// Train the MLP regressor on a dataset
    Train(cmd_train::TrainArgs),
    /// Compare the MLP against nearest-neighbor lookup on a test set
    Eval(cmd_eval::EvalArgs),
    /// Estimate the empirical stability constant over random pairs
    Stability(cmd_stability::StabilityArgs),
    /// Measure the convergence order of the observation-grid sums
    Quadcheck(cmd_quadcheck::QuadcheckArgs),
    /// Re-render histograms and summaries from saved CSVs
    Report(cmd_report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match config::load_file_config(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen::run(args, &file, cli.out_dir),
        Command::Train(args) => cmd_train::run(args, &file, cli.out_dir),
        Command::Eval(args) => cmd_eval::run(args, &file, cli.out_dir),
        Command::Stability(args) => cmd_stability::run(args, &file, cli.out_dir),
        Command::Quadcheck(args) => cmd_quadcheck::run(args, &file, cli.out_dir),
        Command::Report(args) => cmd_report::run(args, &file, cli.out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
