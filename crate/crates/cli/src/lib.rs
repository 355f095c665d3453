//! Experiment harness around `meledit-core`: config files, the GRID1 and
//! PGM formats, and the subcommand implementations behind the `meledit`
//! binary. Everything here is deterministic given a config and a seed;
//! no file carries a timestamp.

pub mod commands;
pub mod config;
pub mod formats;

use std::fmt;

/// Errors split by exit code: bad user input exits 2, everything else 1.
#[derive(Debug)]
pub enum CliError {
    /// Invalid config file, flag value, or input file content.
    Config(String),
    /// IO failures and internal invariant breaks.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Internal(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
