//! Fit artifact schema and JSON helpers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use slgp::dataset::RescaleRecord;
use slgp::domain::DomainSpec;
use slgp::error::{Result, SlgpError};
use slgp::inference::HyperSearchResult;
use slgp::io::{write_atomic, FORMAT_VERSION};
use slgp::rff::RffBasis;

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationInfo {
    pub key: String,
    /// Model-unit location after rescaling.
    pub location: Vec<f64>,
    pub location_raw: Vec<f64>,
    pub held_out: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSummary {
    pub weights: Vec<f64>,
    pub log_posterior: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcSummary {
    pub beta: f64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chain_seed: u64,
    pub acceptance_rate: f64,
    pub accepted: usize,
    pub kept: usize,
    /// Chain CSV file name, relative to the artifact.
    pub chain_file: String,
}

/// Everything needed to reproduce and reuse a fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitArtifact {
    pub format_version: u32,
    /// "map" or "mcmc".
    pub kind: String,
    pub seed: u64,
    pub config: RunConfig,
    pub domain: DomainSpec,
    pub rescale: Option<RescaleRecord>,
    pub stations: Vec<StationInfo>,
    pub holdout: Vec<String>,
    pub basis: RffBasis,
    pub hyper: Option<HyperSearchResult>,
    pub map: Option<MapSummary>,
    pub mcmc: Option<McmcSummary>,
    pub n_train: usize,
    pub n_test: usize,
    pub rejected_rows: usize,
}

impl FitArtifact {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)?;
        write_atomic(path, &json)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SlgpError::Data { line: 0, message: format!("cannot read fit artifact: {e}") })?;
        let artifact: FitArtifact = serde_json::from_str(&text)
            .map_err(|e| SlgpError::Data { line: 0, message: format!("invalid fit artifact: {e}") })?;
        if artifact.format_version != FORMAT_VERSION {
            return Err(SlgpError::Data {
                line: 0,
                message: format!(
                    "unsupported artifact format_version {}",
                    artifact.format_version
                ),
            });
        }
        Ok(artifact)
    }

    pub fn station(&self, key: &str) -> Result<&StationInfo> {
        self.stations.iter().find(|s| s.key == key).ok_or_else(|| SlgpError::Data {
            line: 0,
            message: format!("station '{key}' not present in the fit artifact"),
        })
    }
}

/// Write any serializable report as pretty JSON, atomically.
pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let json = serde_json::to_vec_pretty(value)?;
    write_atomic(path, &json)
}
