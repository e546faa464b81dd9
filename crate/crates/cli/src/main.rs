//! `battsite`: battery siting studies from the command line.
//!
//! Exit codes: 0 success, 1 I/O or schema error, 2 infeasible or unbounded
//! model, 3 extensive form over the hour guardrail, 4 PH iteration cap,
//! 5 subproblem solver failure, 6 validation found violations.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::Overrides;

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Guardrail(String),
    #[error("{0}")]
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) | Failure::Schema(_) => 1,
            Failure::Infeasible(_) => 2,
            Failure::Guardrail(_) => 3,
            Failure::Solver(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "battsite", version, about = "Battery sizing and siting under wildfire shutoffs")]
struct Cli {
    #[command(flatten)]
    flags: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the full-horizon LP directly
    SolveEf,
    /// Solve by progressive hedging over time periods
    SolvePh,
    /// Check a solution file against the configured case
    Validate {
        solution: PathBuf,
    },
    /// Write the extensive form, or every period subproblem, as MPS
    ExportMps {
        #[arg(long)]
        per_period: bool,
    },
    /// Hourly load shed and battery discharge from a solution file
    Report {
        /// Defaults to solution.json in the output directory
        solution: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::SolveEf => commands::solve_ef(&cli.flags),
        Command::SolvePh => commands::solve_ph(&cli.flags),
        Command::Validate { solution } => commands::validate(&cli.flags, &solution),
        Command::ExportMps { per_period } => commands::export_mps(&cli.flags, per_period),
        Command::Report { solution } => commands::report(&cli.flags, solution.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.downcast_ref::<Failure>().map_or(1, Failure::code))
        }
    }
}
