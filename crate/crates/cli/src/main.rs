mod commands;
mod manifest;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{ClassifyArgs, LandscapeArgs, SimulateArgs, SolveArgs, SweepArgs, VerifyArgs};

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NO_CONVERGENCE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (report format 1)");

/// Ground-state energy, Parisi measure and overlap landscape of spherical
/// mixed even p-spin models.
#[derive(Debug, Parser)]
#[command(name = "parisi", version = VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize the Crisanti-Sommers functional on a grid.
    Solve(SolveArgs),
    /// Closed-form phase classification.
    Classify(ClassifyArgs),
    /// Check the optimality system at a given measure.
    Verify(VerifyArgs),
    /// Two-replica bounds and overlap gaps.
    Landscape(LandscapeArgs),
    /// Finite-N gradient ascent and overlap census.
    Simulate(SimulateArgs),
    /// Phase and energy over a two-parameter family of mixtures.
    Sweep(SweepArgs),
}

/// Outcome of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
    NotConverged,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let no_conv = err.chain().any(|c| {
        matches!(
            c.downcast_ref::<parisi_core::Error>(),
            Some(parisi_core::Error::NoConvergence { .. })
        )
    });
    if no_conv {
        EXIT_NO_CONVERGENCE
    } else {
        EXIT_VALIDATION
    }
}

fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Classify(a) => commands::classify(a),
        Command::Verify(a) => commands::verify(a),
        Command::Landscape(a) => commands::landscape(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(Status::Ok) => 0,
        Ok(Status::Failed) => EXIT_VALIDATION,
        Ok(Status::NotConverged) => EXIT_NO_CONVERGENCE,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
