use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use homogen_core::Error;

mod commands;
mod config;

use config::{CellArgs, ConfigFile, Example1dArgs, SolveArgs, SweepArgs};

/// Periodic homogenization toolkit.
#[derive(Debug, Parser)]
#[command(name = "homogen", version)]
struct Cli {
    /// TOML config file with [cell], [solve], [sweep] or [example1d] tables
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the cell problems and report the effective tensor
    Cell(CellArgs),
    /// Compare the fine solution with the homogenized one and its corrector
    Solve(SolveArgs),
    /// Run a D = l·2^k sweep and fit convergence rates
    Sweep(SweepArgs),
    /// Check the 1D cosine example against its closed form
    Example1d(Example1dArgs),
}

/// Exit status of a command that ran to completion.
pub enum Outcome {
    Pass,
    /// A numerical check or rate expectation failed.
    Fail,
    /// Some sweep points did not complete; partial results were written.
    PointsFailed,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. } | Error::ZeroPivot(_) | Error::CrossCheckFailure(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Cell(args) => commands::cell(args.resolve(file.cell)?),
        Command::Solve(args) => commands::solve(args.resolve(file.solve)?),
        Command::Sweep(args) => commands::sweep(args.resolve(file.sweep)?),
        Command::Example1d(args) => commands::example1d(args.resolve(file.example1d)?),
    }
}

fn main() -> ExitCode {
    // usage errors are validation errors, not clap's default status 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(3),
        Ok(Outcome::PointsFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Resolution { limit, .. } = &e {
                eprintln!("hint: the macro spacing must not exceed {limit}; raise --cells-per-period to 8 or more");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
