//! `condvol` command-line pipeline: ingest a CSV panel, describe the return
//! series, fit conditional-volatility models with diagnostics, and simulate
//! fixtures.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;
pub mod svg;

use std::fmt;

pub use args::{Action, Cli, Command};
pub use config::{InputKind, PartialConfig, RunConfig};

/// Failures grouped by the exit code they map to.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags or config, or a reference to a missing column: exit 4.
    Config(String),
    /// Unreadable or unusable data: exit 2.
    Data(String),
    /// Outputs were written but some fit did not converge: exit 3.
    NotConverged(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Data(_) => 2,
            Self::NotConverged(_) => 3,
            Self::Config(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Data(m) => write!(f, "data error: {m}"),
            Self::NotConverged(s) => {
                write!(f, "optimizer did not converge for: {} (rerun with --allow-nonconverged to accept)", s.join(", "))
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<condvol::Error> for CliError {
    fn from(e: condvol::Error) -> Self {
        use condvol::Error as E;
        match e {
            E::UnknownColumn(_) | E::DuplicateName(_) | E::InvalidArgument(_) | E::ParamMismatch(_) | E::Explosive(_) => {
                Self::Config(e.to_string())
            }
            E::AllStartsDiverged => Self::NotConverged(vec![e.to_string()]),
            _ => Self::Data(e.to_string()),
        }
    }
}

/// Runs one parsed invocation: every resolved run in order, stopping at the
/// first hard error. Non-convergence is reported after all runs finish.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let (command, args) = cli.command.split();
    let flags = args.to_partial()?;
    let entries = match &args.config {
        Some(path) => config::load_runs(path)?.into_iter().map(|e| e.over(&flags)).collect(),
        None => vec![flags],
    };
    let mut unconverged = Vec::new();
    for entry in entries {
        let cfg = RunConfig::resolve(entry)?;
        match commands::execute(command, &cfg) {
            Ok(()) => {}
            Err(CliError::NotConverged(s)) => unconverged.extend(s),
            Err(e) => return Err(e),
        }
    }
    if unconverged.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(unconverged))
    }
}
