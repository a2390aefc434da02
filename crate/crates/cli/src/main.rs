//! `trc`: simulate panels, optimize rule thresholds, classify, evaluate and
//! report.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input, 3 grid too
//! large for exhaustive search.

mod commands;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::classify::ClassifyArgs;
use commands::evaluate::EvaluateArgs;
use commands::optimize::OptimizeArgs;
use commands::report::ReportArgs;
use commands::simulate::SimulateArgs;

#[derive(Debug, Parser)]
#[command(
    name = "trc",
    version,
    about = "Optimized rule-based classification of temporal panel data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a public goods game panel with planted player types.
    Simulate(SimulateArgs),
    /// Pick rule thresholds that minimize the compactness cost.
    Optimize(OptimizeArgs),
    /// Label objects with a rule template and fixed thresholds.
    Classify(ClassifyArgs),
    /// Compare two labelings: agreement matrix and probe AUC.
    Evaluate(EvaluateArgs),
    /// Assemble text tables and plot data from a run directory.
    Report(ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Optimize(a) => commands::optimize::run(a),
        Command::Classify(a) => commands::classify::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Report(a) => commands::report::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
