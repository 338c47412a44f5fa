//! `pmlab`: build, validate, measure and certify process matrices from the
//! command line.
//!
//! Exit status is 0 when every check passes, 1 when a check fails (or an
//! input file cannot be read) and 2 on a usage error.

mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Command;
use config::Settings;

#[derive(Debug)]
pub enum CliError {
    Usage { field: String, message: String },
    Failed(String),
}

impl CliError {
    pub fn usage(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Usage {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage { field, message } => write!(f, "invalid `{field}`: {message}"),
            CliError::Failed(message) => f.write_str(message),
        }
    }
}

#[derive(Parser)]
#[command(name = "pmlab", version, about = "Process-matrix laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a process and write it as a PMX1 file (`--out`).
    Build(Settings),
    /// Check positivity, normalization and the validity subspace.
    Validate(Settings),
    /// Entropies and coherent information of W as a state.
    Measure(Settings),
    /// Check a theorem's hypotheses and certify its conclusion.
    Certify(Settings),
    /// Sweep p, or the amplitude angles, and tabulate the measures.
    Scan(Settings),
    /// Randomized entropy-inequality suite.
    Lemmas(Settings),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, settings) = match cli.command {
        Cmd::Build(s) => (Command::Build, s),
        Cmd::Validate(s) => (Command::Validate, s),
        Cmd::Measure(s) => (Command::Measure, s),
        Cmd::Certify(s) => (Command::Certify, s),
        Cmd::Scan(s) => (Command::Scan, s),
        Cmd::Lemmas(s) => (Command::Lemmas, s),
    };
    let settings = match &settings.config {
        Some(path) => match Settings::load(path) {
            Ok(file) => settings.merged_with(file),
            Err(e) => return fail(e),
        },
        None => settings,
    };
    match commands::run(cmd, settings) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        CliError::Usage { .. } => ExitCode::from(2),
        CliError::Failed(_) => ExitCode::from(1),
    }
}
