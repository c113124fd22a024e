//! Run configuration: one JSON file drives every subcommand; CLI flags
//! override individual fields.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use slgp::dataset::CsvSchema;
use slgp::domain::DomainSpec;
use slgp::error::{Result, SlgpError};
use slgp::inference::{HyperGrid, MapOptions};
use slgp::kernel::KernelSpec;
use slgp::metrics::MetricKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub kernel: KernelSpec,
    /// Required for simulate/rates; fits derive the unit domain from data.
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    pub p: usize,
    /// Node counts of the fitting grid over the response box.
    #[serde(default = "default_grid_m")]
    pub grid_m: Vec<usize>,
    /// Node counts of the reporting grid (predict/simulate); defaults to 401.
    #[serde(default)]
    pub report_grid_m: Option<Vec<usize>>,
    #[serde(default)]
    pub mcmc: McmcSettings,
    #[serde(default)]
    pub map: MapOptions,
    #[serde(default)]
    pub data: Option<DataConfig>,
    /// Station keys excluded from training.
    #[serde(default)]
    pub holdout: Vec<String>,
    /// Lengthscale grid search; when present, fits search before fitting.
    #[serde(default)]
    pub hyper: Option<HyperGrid>,
    /// Explicit model-unit locations for simulate/predict.
    #[serde(default)]
    pub locations: Vec<Vec<f64>>,
    /// Station keys to predict at (resolved through the fit artifact).
    #[serde(default)]
    pub stations: Vec<String>,
    #[serde(default = "default_probs")]
    pub probs: Vec<f64>,
    /// Prior draws emitted by simulate.
    #[serde(default = "default_n_draws")]
    pub n_draws: usize,
    #[serde(default)]
    pub rates: Option<RatesConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSettings {
    pub beta: f64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self { beta: 0.1, n_iter: 50_000, burn_in: 10_000, thin: 10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: String,
    pub schema: CsvSchema,
    #[serde(default = "default_margin")]
    pub response_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub gamma: f64,
    pub offsets: Vec<f64>,
    pub n_reps: usize,
    #[serde(default = "default_rate_metrics")]
    pub metrics: Vec<MetricKind>,
    pub fit_range: (f64, f64),
}

fn default_grid_m() -> Vec<usize> {
    vec![101]
}

fn default_probs() -> Vec<f64> {
    vec![0.1, 0.5, 0.9]
}

fn default_n_draws() -> usize {
    100
}

fn default_margin() -> f64 {
    0.1
}

fn default_rate_metrics() -> Vec<MetricKind> {
    vec![MetricKind::Hellinger, MetricKind::Kl, MetricKind::Tv]
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| SlgpError::Config(format!("cannot read config: {e}")))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| SlgpError::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(SlgpError::Config("p must be at least 1".into()));
        }
        if self.grid_m.is_empty() || self.grid_m.iter().any(|&m| m < 2) {
            return Err(SlgpError::Config(format!("bad grid_m {:?}", self.grid_m)));
        }
        if let Some(rep) = &self.report_grid_m {
            if rep.is_empty() || rep.iter().any(|&m| m < 2) {
                return Err(SlgpError::Config(format!("bad report_grid_m {rep:?}")));
            }
        }
        for &p in &self.probs {
            if !(p > 0.0 && p < 1.0) {
                return Err(SlgpError::Config(format!("prob {p} outside (0, 1)")));
            }
        }
        if !(self.mcmc.beta > 0.0 && self.mcmc.beta <= 1.0) {
            return Err(SlgpError::Config(format!("mcmc beta {} outside (0, 1]", self.mcmc.beta)));
        }
        if self.mcmc.burn_in >= self.mcmc.n_iter || self.mcmc.thin == 0 {
            return Err(SlgpError::Config("mcmc needs burn_in < n_iter and thin >= 1".into()));
        }
        Ok(())
    }

    pub fn report_grid(&self) -> Vec<usize> {
        self.report_grid_m.clone().unwrap_or_else(|| vec![401; self.grid_m.len()])
    }

    pub fn domain_required(&self) -> Result<&DomainSpec> {
        self.domain
            .as_ref()
            .ok_or_else(|| SlgpError::Config("this command needs a 'domain' in the config".into()))
    }

    pub fn data_required(&self) -> Result<&DataConfig> {
        self.data
            .as_ref()
            .ok_or_else(|| SlgpError::Config("this command needs a 'data' block in the config".into()))
    }
}
