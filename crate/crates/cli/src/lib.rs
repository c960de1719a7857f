//! Command-line frontend for `annodiff`.
//!
//! Every subcommand reads its inputs from flags, writes its outputs under
//! `--out`, and embeds a plan echo (subcommand plus resolved options) in each
//! file. Exit codes: 0 on success, 1 on invalid input or usage, 2 when a
//! valid run fails.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use serde::Serialize;
use serde_json::Value;

pub use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] annodiff::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_INVALID,
            CliError::Core(e) if e.is_validation() => EXIT_INVALID,
            CliError::Core(annodiff::Error::Io(e)) | CliError::Io(e) if e.kind() == std::io::ErrorKind::NotFound => {
                EXIT_INVALID
            }
            _ => EXIT_RUNTIME,
        }
    }
}

/// The resolved invocation, echoed into every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandPlan {
    pub subcommand: String,
    pub options: Value,
    pub seed: Option<u64>,
}

impl CommandPlan {
    pub fn new<T: Serialize>(subcommand: &str, options: &T, seed: Option<u64>) -> Self {
        CommandPlan {
            subcommand: subcommand.to_string(),
            options: serde_json::to_value(options).expect("options serialize"),
            seed,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("plan serializes")
    }
}

/// Parses `argv` (including the program name) into a plan without running it.
pub fn parse_args<I, T>(argv: I) -> Result<(Cli, CommandPlan), clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let plan = cli.command.plan();
    Ok((cli, plan))
}

/// Runs one invocation; returns the exit code and the files written.
/// Errors are reported on stderr.
pub fn invoke<I, T>(argv: I) -> (i32, Vec<PathBuf>)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (cli, plan) = match parse_args(argv) {
        Ok(parsed) => parsed,
        Err(e) => {
            let _ = e.print();
            return (if e.use_stderr() { EXIT_INVALID } else { EXIT_OK }, Vec::new());
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| commands::execute(&cli.command, &plan)),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => commands::execute(&cli.command, &plan),
    };
    match result {
        Ok(written) => (EXIT_OK, written),
        Err(e) => {
            eprintln!("error: {e}");
            (e.exit_code(), Vec::new())
        }
    }
}

/// [`invoke`], then prints the written paths on stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (code, written) = invoke(argv);
    for path in written {
        println!("{}", path.display());
    }
    code
}
