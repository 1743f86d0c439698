mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "kramers", version, about = "Symplectic scattering and quantum-graph experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Global {
    /// TOML configuration (graph spec or scattering config).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the configured one.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "KRAMERS_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "kramers-out")]
    pub out: PathBuf,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Eigen-wavenumbers of a closed graph with spacing statistics.
    GraphSpectrum(commands::graph::GraphArgs),
    /// Heidelberg-model ensemble with absorption.
    Scattering(commands::scattering::ScatteringArgs),
    /// Tabulate analytic densities.
    Analytic(commands::analytic::AnalyticArgs),
    /// Estimate gamma from reflection or amplitude samples.
    FitGamma(commands::fit::FitArgs),
    /// KS comparison of an ensemble file against analytic curves.
    Compare(commands::compare::CompareArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(w) = cli.global.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: cannot start {w} workers: {e}");
            return ExitCode::from(error::EXIT_CONFIG);
        }
    }
    let g = &cli.global;
    let result: Result<(), CliError> = match &cli.command {
        Command::GraphSpectrum(a) => commands::graph::run(g, a),
        Command::Scattering(a) => commands::scattering::run(g, a),
        Command::Analytic(a) => commands::analytic::run(g, a),
        Command::FitGamma(a) => commands::fit::run(g, a),
        Command::Compare(a) => commands::compare::run(g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
