use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bound;
mod mi;
mod output;
mod train;
mod validate;

#[derive(Debug, Parser)]
#[command(name = "dispac", version, about = "Disintegrated PAC-Bayes bounds, training and validity checks")]
struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files; created if missing.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one bound and print its report as JSON.
    Bound(bound::BoundArgs),
    /// Train priors and a posterior, then evaluate every bound on sampled nets.
    Train(train::TrainArgs),
    /// Coverage of bound statements on a finite problem, and the Maurer check.
    Validate(validate::ValidateArgs),
    /// Sibson and Shannon mutual information of a finite problem.
    Mi(mi::MiArgs),
}

pub struct Common {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = Common { seed: cli.seed, out_dir: cli.out_dir, config: cli.config };
    let result = match cli.command {
        Command::Bound(a) => bound::run(&common, a),
        Command::Train(a) => train::run(&common, a),
        Command::Validate(a) => validate::run(&common, a),
        Command::Mi(a) => mi::run(&common, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
