use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::PartialConfig;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "condvol", version, about = "Conditional-volatility modelling of daily return series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary statistics, autocorrelations and plots per series.
    Describe(Args),
    /// Fit a variance model per series and run the residual diagnostics.
    Fit(Args),
    /// Write a simulated panel and its true variance path.
    Simulate(Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Describe,
    Fit,
    Simulate,
}

impl Command {
    pub fn split(self) -> (Action, Args) {
        match self {
            Self::Describe(a) => (Action::Describe, a),
            Self::Fit(a) => (Action::Fit, a),
            Self::Simulate(a) => (Action::Simulate, a),
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Args {
    /// Input CSV: `date` column (YYYY-MM-DD) then numeric columns.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Dependent series, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub series: Option<Vec<String>>,
    /// garch, gjr or egarch.
    #[arg(long)]
    pub family: Option<String>,
    /// Mean regressors; `L<k>.name` sets a lag, dependent-series names default to lag 1.
    #[arg(long = "mean-x", value_delimiter = ',')]
    pub mean_x: Option<Vec<String>>,
    /// Variance regressors, same syntax; a series' own column is skipped.
    #[arg(long = "var-x", value_delimiter = ',')]
    pub var_x: Option<Vec<String>>,
    /// Lag depth for autocorrelations and diagnostics [default: 24].
    #[arg(long)]
    pub lags: Option<usize>,
    /// simple or log [default: simple].
    #[arg(long)]
    pub returns: Option<String>,
    /// prices or returns [default: prices].
    #[arg(long)]
    pub input: Option<String>,
    /// Level columns to forward-fill and first-difference.
    #[arg(long, value_delimiter = ',')]
    pub diff: Option<Vec<String>>,
    /// Columns used as they are.
    #[arg(long, value_delimiter = ',')]
    pub raw: Option<Vec<String>>,
    /// Output directory [default: condvol-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exit 0 even if a fit did not converge.
    #[arg(long)]
    pub allow_nonconverged: bool,
    /// Hold a parameter fixed, e.g. `gamma1=0` (repeatable).
    #[arg(long = "fix", value_name = "NAME=VALUE")]
    pub fix: Vec<String>,
    /// Decimals in CSV and Markdown tables [default: 3].
    #[arg(long)]
    pub decimals: Option<usize>,
    /// Simulated rows [default: 2000].
    #[arg(long)]
    pub rows: Option<usize>,
    /// Simulated rows discarded before output [default: 500].
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Simulation parameter, e.g. `alpha1=0.1` (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Simulate a non-stationary parameterization.
    #[arg(long)]
    pub allow_explosive: bool,
    /// TOML file with `[[run]]` entries; flags fill keys an entry leaves out.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn assignments(items: &[String]) -> Result<Option<BTreeMap<String, f64>>, CliError> {
    if items.is_empty() {
        return Ok(None);
    }
    let mut map = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected NAME=VALUE, got `{item}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| CliError::Config(format!("`{item}`: value is not a number")))?;
        map.insert(k.trim().to_string(), v);
    }
    Ok(Some(map))
}

impl Args {
    pub fn to_partial(&self) -> Result<PartialConfig, CliError> {
        Ok(PartialConfig {
            data: self.data.clone(),
            series: self.series.clone(),
            family: self.family.clone(),
            mean_x: self.mean_x.clone(),
            var_x: self.var_x.clone(),
            lags: self.lags,
            returns: self.returns.clone(),
            input: self.input.clone(),
            diff: self.diff.clone(),
            raw: self.raw.clone(),
            out: self.out.clone(),
            seed: self.seed,
            allow_nonconverged: self.allow_nonconverged.then_some(true),
            fix: assignments(&self.fix)?,
            decimals: self.decimals,
            rows: self.rows,
            burn_in: self.burn_in,
            params: assignments(&self.params)?,
            allow_explosive: self.allow_explosive.then_some(true),
        })
    }
}
