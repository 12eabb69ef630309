//! The `colband` command-line pipeline: cluster, build W, replay, simulate,
//! report, and grid runs over all of them.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod metrics;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
pub use error::CliError;

/// Parses `argv` (config file included) and runs the chosen command. Text meant
/// for stdout is returned rather than printed.
pub fn run(argv: Vec<OsString>) -> Result<Option<String>, CliError> {
    let argv = config::expand_config(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            return Err(CliError::Config(e.to_string().trim_end().to_string()))
        }
        Err(e) => return Ok(Some(e.to_string())),
    };
    match &cli.command {
        Command::Genlog(a) => commands::genlog(a).map(|_| None),
        Command::Cluster(a) => commands::cluster(a).map(|_| None),
        Command::Buildw(a) => commands::buildw(a).map(|_| None),
        Command::ValidateW(a) => commands::validate_w(a).map(Some),
        Command::Replay(a) => commands::replay(a).map(|_| None),
        Command::Simulate(a) => commands::simulate_cmd(a).map(|_| None),
        Command::Report(a) => commands::report(a),
        Command::Grid(a) => commands::grid(a).map(|_| None),
    }
}
