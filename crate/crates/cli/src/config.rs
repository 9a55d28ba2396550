use std::path::{Path, PathBuf};

use qbattery::algebra::DEFAULT_DENSE_CAP;
use qbattery::ensemble::{Quantity, RunOptions, SweepPlan};
use qbattery::models::ModelParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const ENV_WORKERS: &str = "QBATT_WORKERS";
pub const ENV_DENSE_CAP: &str = "QBATT_DENSE_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

fn default_fraction() -> f64 {
    1.0
}

fn default_quantities() -> Vec<Quantity> {
    vec![Quantity::Variance]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_cap() -> usize {
    DEFAULT_DENSE_CAP
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Jsonl]
}

fn default_tolerance() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_values: Vec<usize>,
    pub realizations: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_fraction")]
    pub target_fraction: f64,
    #[serde(default = "default_quantities")]
    pub quantities: Vec<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// `0` uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_cap")]
    pub dense_cap: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { out: default_out(), workers: 0, dense_cap: default_cap(), formats: default_formats() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { tolerance: default_tolerance() }
    }
}

/// The whole run: one TOML file plus the few overrides allowed on top of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub sweep: SweepSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub fit: FitSection,
}

/// Command-line values that take precedence over the file and the environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub formats: Vec<Format>,
}

/// Reads `QBATT_WORKERS` and `QBATT_DENSE_CAP` through `lookup`.
pub fn env_overrides(lookup: impl Fn(&str) -> Option<String>) -> Result<(Option<usize>, Option<usize>), CliError> {
    let parse = |key: &str| -> Result<Option<usize>, CliError> {
        match lookup(key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("{key} must be a non-negative integer, got {v:?}"))),
        }
    };
    Ok((parse(ENV_WORKERS)?, parse(ENV_DENSE_CAP)?))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// File, then environment, then flags.
    pub fn apply(
        &mut self,
        env: (Option<usize>, Option<usize>),
        flags: &Overrides,
    ) {
        if let Some(w) = env.0 {
            self.run.workers = w;
        }
        if let Some(c) = env.1 {
            self.run.dense_cap = c;
        }
        if let Some(out) = &flags.out {
            self.run.out = out.clone();
        }
        if let Some(seed) = flags.seed {
            self.sweep.master_seed = seed;
        }
        if let Some(w) = flags.workers {
            self.run.workers = w;
        }
        if !flags.formats.is_empty() {
            self.run.formats = flags.formats.clone();
        }
        self.run.formats.sort();
        self.run.formats.dedup();
    }

    pub fn plan(&self) -> SweepPlan {
        SweepPlan {
            spec_template: self.model.clone(),
            n_values: self.sweep.n_values.clone(),
            realizations: self.sweep.realizations,
            master_seed: self.sweep.master_seed,
            target_fraction: self.sweep.target_fraction,
            quantities: self.sweep.quantities.clone(),
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions { workers: self.run.workers, dense_cap: self.run.dense_cap, ..RunOptions::default() }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.run.dense_cap == 0 {
            return Err(CliError::Config("dense_cap must be positive".into()));
        }
        if self.run.formats.is_empty() {
            return Err(CliError::Config("at least one output format is required".into()));
        }
        if !(self.fit.tolerance.is_finite() && self.fit.tolerance >= 0.0) {
            return Err(CliError::Config(format!("fit tolerance must be >= 0, got {}", self.fit.tolerance)));
        }
        self.model.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.plan().validate(self.run.dense_cap).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.run.formats.contains(&format)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
