//! Command-line arguments. Every subcommand also accepts `--config FILE`, a
//! JSON document with the same keys as the long flags (`in`, `out`, `seed`,
//! `k_min`, ...); flags given on the command line take precedence.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tergmix::netseries::LoadOptions;
use tergmix::{FitConfig, ModelKind, SeriesFormat, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "tergmix", version, about = "Community detection in time-evolving networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a network series with planted communities.
    Simulate(SimulateArgs),
    /// Fit the mixture model at a fixed number of communities.
    Fit(FitArgs),
    /// Fit over a range of K and score each with CL-BIC and ICL.
    Select(SelectArgs),
    /// Compare estimated labels (and parameters) against the truth.
    Metrics(MetricsArgs),
    /// Within- and between-community instability statistics.
    Instability(InstabilityArgs),
}

/// Where and how to read a network series.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SeriesArgs {
    /// Series file (long TSV) or directory of per-snapshot files.
    #[arg(long = "in", value_name = "PATH")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Input layout; inferred from the path when omitted.
    #[arg(long, value_parser = ["long_tsv", "snapshot_dir"])]
    pub format: Option<String>,
    /// Node count, overriding what the file declares or implies.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Number of transitions T, overriding what the file declares or implies.
    #[arg(long)]
    pub horizon: Option<usize>,
}

/// Estimation settings shared by `fit` and `select`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EstimationArgs {
    #[arg(long, value_parser = ["tergm", "stergm"])]
    pub model: Option<String>,
    /// Seed for the random restarts.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Relative lower-bound change that stops the EM iterations.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Named design: model1 .. model6.
    #[arg(long)]
    pub preset: Option<String>,
    /// Expected model of a mixture preset; a mismatch is an error.
    #[arg(long, value_parser = ["tergm", "stergm"])]
    pub model: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// A full generator configuration, accepted only through `--config`.
    #[arg(skip)]
    pub simulation: Option<SimConfig>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub series: SeriesArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimation: EstimationArgs,
    /// Number of communities.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SelectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub series: SeriesArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimation: EstimationArgs,
    /// Smallest K tried (default 1).
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Largest K tried (default 6).
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MetricsArgs {
    /// True labels (1-based TSV).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Estimated labels (1-based TSV); taken from `--fit` when omitted.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// A fit document; supplies labels and, with `--truth-params`, RSE.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// JSON with the true `pi` and `theta`.
    #[arg(long)]
    pub truth_params: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct InstabilityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub series: SeriesArgs,
    /// Community labels (1-based TSV).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Number of communities (default: largest label).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Overlays the flags given on the command line onto the `--config`
/// document, if any.
pub fn resolve<T: Serialize + DeserializeOwned>(cli: &T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(cli)?)?);
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(doc_map) = &mut doc else {
        bail!("config {} must be a JSON object", path.display());
    };
    if let Value::Object(flags) = serde_json::to_value(cli)? {
        for (key, value) in flags {
            if !value.is_null() {
                doc_map.insert(key, value);
            }
        }
    }
    serde_json::from_value(doc).with_context(|| format!("config {} does not match the command", path.display()))
}

/// Exits with a usage error, as clap does for missing flags.
pub fn usage_error(message: &str) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::MissingRequiredArgument, message)
        .exit()
}

pub fn required<T: Clone>(value: &Option<T>, flag: &str) -> T {
    value
        .clone()
        .unwrap_or_else(|| usage_error(&format!("the following required argument was not provided: {flag}")))
}

pub fn parse_model(name: &Option<String>) -> Result<ModelKind> {
    Ok(required(name, "--model").parse()?)
}

impl SeriesArgs {
    pub fn path(&self) -> PathBuf {
        required(&self.input, "--in")
    }

    pub fn format(&self) -> Result<SeriesFormat> {
        Ok(match self.format.as_deref() {
            Some("long_tsv") => SeriesFormat::LongTsv,
            Some("snapshot_dir") => SeriesFormat::SnapshotDir,
            Some(other) => bail!("unknown format {other:?}"),
            None if self.path().is_dir() => SeriesFormat::SnapshotDir,
            None => SeriesFormat::LongTsv,
        })
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            nodes: self.nodes,
            horizon: self.horizon,
        }
    }
}

impl EstimationArgs {
    pub fn fit_config(&self) -> FitConfig {
        let defaults = FitConfig::default();
        FitConfig {
            seed: required(&self.seed, "--seed"),
            restarts: self.restarts.unwrap_or(defaults.restarts),
            rel_tol: self.tol.unwrap_or(defaults.rel_tol),
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
            ..defaults
        }
    }
}
