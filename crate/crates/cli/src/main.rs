//! `quantmatch`: simulate row-column data, profile quantile-matching
//! families, compare targets and report correlations.
//!
//! Exit codes: 0 success, 2 usage, 3 domain or data error, 4 numeric failure.

mod commands;
mod data;
mod error;
mod manifest;
mod targetspec;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CompareArgs, CorrelateArgs, ProfileArgs, SimulateArgs};

#[derive(Debug, Parser)]
#[command(name = "quantmatch", version, about = "Quantile-matching transformations for row-column linear models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a row-column experiment and write it as CSV
    Simulate(SimulateArgs),
    /// Profile likelihood over a one-parameter family of transformations
    Profile(ProfileArgs),
    /// Likelihood ratio between two target distributions
    Compare(CompareArgs),
    /// Correlations of the response with its quantile-matched versions
    Correlate(CorrelateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Profile(a) => commands::profile(a),
        Command::Compare(a) => commands::compare(a),
        Command::Correlate(a) => commands::correlate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
