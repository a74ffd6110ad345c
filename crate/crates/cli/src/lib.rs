//! `jflab`: field moments, noise sampling, Jacobi matrices, closed-form
//! functionals and partition utilities from the command line.
//!
//! Every command prints a JSON report that echoes the fully resolved
//! configuration, so a report is enough to reproduce its run.

pub mod commands;
pub mod config;
pub mod error;

use std::fs;
use std::io::{self, Write};

use clap::{Parser, Subcommand};

pub use commands::{cmd_jacobi, cmd_moments, cmd_partitions, cmd_sample, cmd_transform, Output};
pub use config::{Flags, PhiList, RunConfig};
pub use error::{CliError, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_TRUNCATION};

#[derive(Debug, Parser)]
#[command(name = "jflab", version, about = "Jacobi field laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Operator vacuum moment vs. partition-sum prediction.
    Moments(Flags),
    /// Monte Carlo samples and empirical functionals (--out takes the JSON-lines file).
    Sample(Flags),
    /// Moments, recurrence coefficients and Gauss measures.
    Jacobi(Flags),
    /// Closed-form characteristic, Laplace and free cumulant functionals.
    Transform(Flags),
    /// Partition enumeration and moment/cumulant conversion.
    Partitions(Flags),
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command) -> Result<i32, CliError> {
    let (flags, f): (&Flags, fn(&RunConfig) -> Result<Output, CliError>) = match command {
        Command::Moments(flags) => (flags, cmd_moments),
        Command::Sample(flags) => (flags, cmd_sample),
        Command::Jacobi(flags) => (flags, cmd_jacobi),
        Command::Transform(flags) => (flags, cmd_transform),
        Command::Partitions(flags) => (flags, cmd_partitions),
    };
    let config = flags.resolve()?;
    let output = f(&config)?;
    // `sample` writes its samples to --out; the report always goes to stdout there.
    match (&config.out, command) {
        (Some(path), c) if !matches!(c, Command::Sample(_)) => {
            fs::write(path, format!("{}\n", output.report)).map_err(|e| CliError::io(path, e))?
        }
        _ => {
            let written = writeln!(io::stdout().lock(), "{}", output.report);
            // A closed pipe (e.g. `| head`) is not an error.
            match written {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(CliError::io(std::path::Path::new("<stdout>"), e)),
                _ => {}
            }
        }
    }
    Ok(output.code)
}
