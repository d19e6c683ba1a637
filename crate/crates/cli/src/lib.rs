//! Experiment driver behind the `sbmclique` binary.

pub mod commands;
pub mod config;
pub mod sweep;
pub mod verify;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::Path;

use clap::Parser;

use config::{Cli, Command};

/// Exit status 1 for failed checks, 2 for usage and I/O problems.
#[derive(Debug)]
pub enum CliError {
    Check(String),
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Check(s) | CliError::Usage(s) => f.write_str(s),
        }
    }
}

impl From<sbmclique::Error> for CliError {
    fn from(e: sbmclique::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

/// Writes to `out` if given, otherwise to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Gen(o) => o.resolve().and_then(|o| commands::gen(&o)),
        Command::Stat(o) => o.resolve().and_then(|o| commands::stat(&o)),
        Command::Recover(o) => o.resolve().and_then(|o| commands::recover(&o)),
        Command::Verify(o) => o.resolve().and_then(|o| verify::cmd_verify(&o)),
        Command::Sweep(o) => o.resolve().and_then(|o| sweep::cmd_sweep(&o)),
        Command::Ld(o) => o.resolve().and_then(|o| commands::ld(&o)),
        Command::Regime(o) => o.resolve().and_then(|o| commands::regime(&o)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
