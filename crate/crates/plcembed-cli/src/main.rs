//! `plcembed` — train, evaluate, and apply raw-byte classifiers for PLC
//! executables, and generate synthetic corpora to exercise the pipeline.

mod commands;
mod config;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "plcembed",
    version,
    about = "Toolchain and functionality classification of raw PLC executables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a dataset: programs, per-toolchain binaries, category histogram
    Inspect(commands::inspect::InspectArgs),
    /// Generate a synthetic multi-dialect corpus
    Generate(commands::generate::GenerateArgs),
    /// Train a classifier and keep the best-epoch checkpoint
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint on the held-out test split, clean and corrupted
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Classify binaries with a trained checkpoint
    Classify(commands::classify::ClassifyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Inspect(args) => commands::inspect::run(args),
        Command::Generate(args) => commands::generate::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Classify(args) => commands::classify::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
