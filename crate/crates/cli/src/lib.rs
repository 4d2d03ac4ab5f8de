//! Command line front end: `convert`, `train`, `eval` and `parse`.
//!
//! [`run`] takes the argument list and output streams so the whole tool can
//! be driven from tests; the binary only forwards `std::env` and exits with
//! the returned status.

pub mod args;
mod commands;
pub mod convert;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;

pub use args::Cli;

/// Exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const DATA: i32 = 3;
    pub const CHECKPOINT: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(ingtag_core::Error),
    #[error("{0}")]
    Checkpoint(ingtag_core::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Data(_) | CliError::Output(_) => exit::DATA,
            CliError::Checkpoint(_) => exit::CHECKPOINT,
        }
    }
}

impl From<ingtag_core::Error> for CliError {
    fn from(e: ingtag_core::Error) -> Self {
        match e {
            ingtag_core::Error::InvalidArgument(m) => CliError::Usage(m),
            ingtag_core::Error::Checkpoint(_) => CliError::Checkpoint(e),
            other => CliError::Data(other),
        }
    }
}

/// Run the tool with `args` (including the program name). Returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let rendered = e.render().to_string();
            let _ = if code == exit::OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match commands::dispatch(&cli, out, err) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
