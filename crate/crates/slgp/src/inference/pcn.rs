//! Preconditioned Crank-Nicolson sampling of the weight posterior.
//!
//! The proposal `eps' = sqrt(1 - beta^2) eps + beta xi` preserves the
//! standard-normal prior exactly, so the acceptance ratio involves only the
//! data likelihood. With no data every proposal is accepted and the chain
//! samples the prior.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlgpError};

use super::posterior::PosteriorProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Proposal step in `(0, 1]`; `beta = 1` proposes independent prior draws.
    pub beta: f64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { beta: 0.1, n_iter: 50_000, burn_in: 10_000, thin: 10, seed: 0 }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(SlgpError::InvalidParameter(format!(
                "pCN beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if self.burn_in >= self.n_iter {
            return Err(SlgpError::InvalidParameter(format!(
                "burn-in {} must be smaller than n_iter {}",
                self.burn_in, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(SlgpError::InvalidParameter("thin must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of retained draws, `floor((n_iter - burn_in) / thin)`.
    pub fn kept(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    /// Retained weight vectors, one row per draw.
    pub draws: Array2<f64>,
    pub acceptance_rate: f64,
    pub accepted: usize,
    /// Log posterior after each iteration (all iterations, not only kept).
    pub log_posterior_trace: Vec<f64>,
    pub config: McmcConfig,
}

/// Run one pCN chain. Deterministic given the seed.
pub fn pcn_sample(problem: &PosteriorProblem, config: &McmcConfig) -> Result<PosteriorSamples> {
    config.validate()?;
    let dim = problem.basis().feature_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eps: Array1<f64> =
        Array1::from_iter((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let mut loglik = problem.log_likelihood(&eps)?;
    let shrink = (1.0 - config.beta * config.beta).sqrt();

    let kept = config.kept();
    let mut draws = Array2::zeros((kept, dim));
    let mut trace = Vec::with_capacity(config.n_iter);
    let mut accepted = 0usize;
    let mut stored = 0usize;
    let mut proposal = Array1::zeros(dim);

    for iter in 1..=config.n_iter {
        for (p, e) in proposal.iter_mut().zip(eps.iter()) {
            let xi: f64 = rng.sample(StandardNormal);
            *p = shrink * e + config.beta * xi;
        }
        let loglik_prop = problem.log_likelihood(&proposal)?;
        let u: f64 = rng.random();
        if u.ln() < loglik_prop - loglik {
            std::mem::swap(&mut eps, &mut proposal);
            loglik = loglik_prop;
            accepted += 1;
        }
        trace.push(loglik - 0.5 * eps.dot(&eps));
        if iter > config.burn_in && (iter - config.burn_in).is_multiple_of(config.thin) && stored < kept {
            draws.row_mut(stored).assign(&eps);
            stored += 1;
        }
    }
    debug_assert_eq!(stored, kept);
    Ok(PosteriorSamples {
        draws,
        acceptance_rate: accepted as f64 / config.n_iter as f64,
        accepted,
        log_posterior_trace: trace,
        config: *config,
    })
}
