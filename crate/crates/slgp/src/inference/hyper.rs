//! Lengthscale selection by grid search over MAP fits.
//!
//! Candidates are per-dimension fractions of the domain ranges. Each
//! candidate rebuilds the basis with the same seed, runs MAP from zero and
//! records the negative log posterior at the optimum; the smallest wins,
//! with exact ties broken toward the larger (smoother) lengthscales.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::domain::DomainSpec;
use crate::error::{Result, SlgpError};
use crate::grid::QuadratureGrid;
use crate::kernel::KernelSpec;
use crate::rff::build_basis;

use super::map::{map_estimate, MapOptions, MapReport};
use super::posterior::PosteriorProblem;

/// Candidate lengthscale vectors expressed as fractions of the per-dimension
/// ranges (spatial dimensions first, then response dimensions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub fractions: Vec<Vec<f64>>,
}

impl HyperGrid {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(SlgpError::InvalidParameter("empty hyperparameter grid".into()));
        }
        for cand in &self.fractions {
            if cand.len() != dim {
                return Err(SlgpError::DimensionMismatch { expected: dim, got: cand.len() });
            }
            if cand.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
                return Err(SlgpError::InvalidParameter(format!(
                    "fractions must be positive, got {cand:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperCandidate {
    pub fractions: Vec<f64>,
    pub lengthscales: Vec<f64>,
    /// Negative log posterior at the MAP, when the fit succeeded.
    pub neg_log_posterior: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperSearchResult {
    pub candidates: Vec<HyperCandidate>,
    /// Index of the winning candidate in `candidates`.
    pub best: usize,
}

impl HyperSearchResult {
    pub fn best_candidate(&self) -> &HyperCandidate {
        &self.candidates[self.best]
    }
}

/// Absolute lengthscales for a fraction vector over the domain ranges.
pub fn fractions_to_lengthscales(domain: &DomainSpec, fractions: &[f64]) -> Vec<f64> {
    domain
        .bounds_d
        .iter()
        .chain(domain.bounds_t.iter())
        .zip(fractions)
        .map(|((lo, hi), f)| f * (hi - lo))
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn hyper_grid_search(
    template: &KernelSpec,
    hyper: &HyperGrid,
    dataset: &Dataset,
    domain: &DomainSpec,
    grid: &QuadratureGrid,
    p: usize,
    seed: u64,
    options: &MapOptions,
) -> Result<HyperSearchResult> {
    hyper.validate(domain.dim())?;
    let candidates: Vec<HyperCandidate> = hyper
        .fractions
        .par_iter()
        .map(|fractions| {
            let lengthscales = fractions_to_lengthscales(domain, fractions);
            let fit: Result<MapReport> = (|| {
                let spec = template.with_lengthscales(lengthscales.clone())?;
                let basis = build_basis(&spec, domain, p, seed)?;
                let problem = PosteriorProblem::new(&basis, dataset, grid)?;
                let init = ndarray::Array1::zeros(basis.feature_dim());
                map_estimate(&problem, &init, options)
            })();
            match fit {
                Ok(report) => HyperCandidate {
                    fractions: fractions.clone(),
                    lengthscales,
                    neg_log_posterior: Some(-report.log_posterior),
                    converged: report.converged,
                    error: None,
                },
                Err(e) => HyperCandidate {
                    fractions: fractions.clone(),
                    lengthscales,
                    neg_log_posterior: None,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, cand) in candidates.iter().enumerate() {
        let Some(nlp) = cand.neg_log_posterior else { continue };
        let better = match best {
            None => true,
            Some(j) => {
                let cur = candidates[j].neg_log_posterior.expect("best has a value");
                let total: f64 = cand.lengthscales.iter().sum();
                let cur_total: f64 = candidates[j].lengthscales.iter().sum();
                nlp < cur || (nlp == cur && total > cur_total)
            }
        };
        if better {
            best = Some(i);
        }
    }
    let best = best.ok_or_else(|| {
        SlgpError::Numeric("every hyperparameter candidate failed to fit".into())
    })?;
    Ok(HyperSearchResult { candidates, best })
}
