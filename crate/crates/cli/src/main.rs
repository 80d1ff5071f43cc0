use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::Parser;
use liouville_cli::error::CliError;
use liouville_cli::output::canonical_json;
use liouville_cli::{configure_threads, render, Cli, THREADS_ENV};
use std::io::Write;
use std::process::ExitCode;

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", canonical_json(&e.to_json()));
    ExitCode::from(e.exit as u8)
}

fn usage_error(e: &clap::Error) -> CliError {
    let flag = match e.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => Some(s.split_whitespace().next().unwrap_or(s).to_string()),
        Some(ContextValue::Strings(v)) => v.first().cloned(),
        _ => None,
    };
    let message = e.render().to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
    CliError::usage(message, flag)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&usage_error(&e)),
    };
    if let Err(e) = configure_threads(std::env::var(THREADS_ENV).ok()) {
        return fail(&e);
    }
    let text = match render(&cli) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&CliError::io(e.to_string())),
    }
}
