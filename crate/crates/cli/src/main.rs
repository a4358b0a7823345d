use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cmd;
mod config;
mod fail;
mod out;

#[derive(Parser)]
#[command(
    name = "instdyn",
    version,
    about = "Institutions/economy dynamics: simulation and estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Tab-delimited input and output instead of comma.
    #[arg(long, global = true)]
    pub tab: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic cohort and write E and I panels.
    Synth(cmd::synth::SynthArgs),
    /// Standardize, build the composite index, join and time-average.
    Prep(cmd::prep::PrepArgs),
    /// Streamlines of the stable or unconstrained system.
    Streamlines(cmd::streamlines::StreamArgs),
    /// Persistence matrix, erosion rate and half-life of one panel.
    Persistence(cmd::persistence::PersistenceArgs),
    /// Relaxation fits along an axis pair, screening and aggregation.
    Fit(cmd::fit::FitArgs),
    /// Sound-fit tally against projection angle.
    Scan(cmd::fit::ScanArgs),
    /// Coupling and drag from the two mean time constants.
    Infer(cmd::fit::InferArgs),
    /// Variance ratio and principal axes of entity averages.
    Spread(cmd::regress::SpreadArgs),
    /// Regressions of mu and kappa on per-entity covariates.
    Regress(cmd::regress::RegressArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd::synth::run(a),
        Command::Prep(a) => cmd::prep::run(a),
        Command::Streamlines(a) => cmd::streamlines::run(a),
        Command::Persistence(a) => cmd::persistence::run(a),
        Command::Fit(a) => cmd::fit::run_fit(a),
        Command::Scan(a) => cmd::fit::run_scan(a),
        Command::Infer(a) => cmd::fit::run_infer(a),
        Command::Spread(a) => cmd::regress::run_spread(a),
        Command::Regress(a) => cmd::regress::run_regress(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
