//! Command-line front end for `liouville-core`.
//!
//! Every subcommand prints one canonical JSON document (default) or a CSV
//! table (`--format csv`). Failures print `{"code", "message", "flag"}` on
//! standard error and exit with 1 (bad input) or 2 (numerical failure).

pub mod commands;
pub mod error;
pub mod output;

use clap::{Parser, ValueEnum};
use commands::Command;
use error::CliError;
use std::path::PathBuf;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "liouville", version, about = "Critical points, spectra and branches of the singular Liouville equation on the disk")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "LIOUVILLE_THREADS";

pub fn configure_threads(value: Option<String>) -> Result<(), CliError> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::domain(THREADS_ENV, format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError { code: "internal", message: e.to_string(), flag: None, exit: error::EXIT_INTERNAL })
}

/// Runs a parsed invocation and returns the bytes to emit.
pub fn render(cli: &Cli) -> Result<String, CliError> {
    let report = commands::run(&cli.command)?;
    Ok(match cli.format {
        Format::Json => {
            let mut s = output::canonical_json(&report.json);
            s.push('\n');
            s
        }
        Format::Csv => report.table.to_csv(),
    })
}
