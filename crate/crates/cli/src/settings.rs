use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bisecr_core::ModelKind;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Identified,
    Reduced,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Identified => ModelKind::Identified,
            Model::Reduced => ModelKind::Reduced,
        }
    }
}

/// Every setting, read from the config file and overridden by flags of the
/// same name.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Model variant
    #[arg(long, global = true, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,

    /// Random seed
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Total MCMC sweeps, burn-in included
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,

    /// Sweeps discarded before recording draws
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,

    /// Keep every `thin`-th sweep after burn-in
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,

    /// Data augmentation bound M
    #[arg(long = "m", global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,

    /// Upper bound R of the uniform sigma priors
    #[arg(long = "r", global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,

    /// Width of the state-space margin around the trap array
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub buffer: Option<f64>,

    /// Number of sampling occasions J
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occasions: Option<usize>,

    /// Trap CSV (`trap_id,x,y`)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traps: Option<PathBuf>,

    /// Capture CSV (`animal_id,flank,trap_id,occasion`)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub captures: Option<PathBuf>,

    /// Sex CSV (`animal_id,sex`)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sexes: Option<PathBuf>,

    /// Posterior samples CSV written by `fit`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<PathBuf>,

    /// Activity-centre snapshots CSV written by `fit`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<PathBuf>,

    /// Posterior summary CSV written by `fit`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// True population size for simulation
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    /// True number of males for simulation
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_male: Option<usize>,

    /// Per-detector detection probability for simulation
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,

    /// Baseline trap entry probability for simulation
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,

    /// Male movement scale for simulation
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_m: Option<f64>,

    /// Female movement scale for simulation
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_f: Option<f64>,

    /// Probability that a simulated animal's sex is recorded as unknown
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unknown_sex_fraction: Option<f64>,

    /// Back-simulation replicates
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,

    /// Raster pixel side; defaults to a quarter of the posterior mean of sigma_f
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<f64>,

    /// Divide raster pixels by their area
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_area: Option<bool>,

    /// Record activity centres of every kept draw
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keep_snapshots: Option<bool>,

    /// Tune proposal scales during burn-in
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adapt: Option<bool>,

    /// Print a progress line every this many sweeps
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub progress_every: Option<usize>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `self` with every key set in `over` replaced.
    pub fn overlay(self, over: &Settings) -> Result<Self> {
        let mut base = toml::Table::try_from(&self)?;
        base.extend(toml::Table::try_from(over)?);
        Ok(base.try_into()?)
    }

    pub fn require<'a, T>(value: &'a Option<T>, key: &str) -> Result<&'a T> {
        match value {
            Some(v) => Ok(v),
            None => bail!("missing setting `{key}`: pass --{} or set it in the config file", key.replace('_', "-")),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}
