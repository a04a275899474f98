//! Command-line entry points for the neuro-fuzzy MPSoC scheduler: graph
//! generation, rule-base training, single-schedule runs and corpus-level
//! policy comparisons.

mod commands;
mod error;
mod exports;
mod manifest;

use clap::{Parser, Subcommand};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "mpsched",
    version,
    about = "Neuro-fuzzy online task scheduling for heterogeneous MPSoCs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic application graphs.
    Generate(commands::generate::GenerateArgs),
    /// Learn rule-base consequents over a training corpus.
    Train(commands::train::TrainArgs),
    /// Schedule one application and export the simulation result.
    Schedule(commands::schedule::ScheduleArgs),
    /// Compare policies over a corpus.
    Evaluate(commands::evaluate::EvaluateArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => commands::generate::run(args, VERSION),
        Command::Train(args) => commands::train::run(args, VERSION),
        Command::Schedule(args) => commands::schedule::run(args, VERSION),
        Command::Evaluate(args) => commands::evaluate::run(args, VERSION),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
