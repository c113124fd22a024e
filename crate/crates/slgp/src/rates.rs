//! Monte Carlo verification of the spatial mean-power continuity rates.
//!
//! Each replicate draws a fresh frequency basis and a fresh prior weight
//! vector, evaluates density slices at the domain center and at offset
//! locations along the first spatial coordinate, and accumulates the chosen
//! dissimilarity raised to `gamma`. Averaging over replicates estimates
//! `E[D(Y_x, Y_{x+h})^gamma]`, whose log-log slope against `h` is compared
//! to the theoretical exponent.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::slogt_values;
use crate::domain::DomainSpec;
use crate::error::{Result, SlgpError};
use crate::grid::QuadratureGrid;
use crate::kernel::KernelSpec;
use crate::metrics::{divergence, MetricKind};
use crate::rff::{build_basis, draw_prior_weights, ResponsePhases};

/// Stream offset separating replicate RNGs from other consumers of the seed.
const REPLICATE_STREAM_BASE: u64 = 0x100;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateExperiment {
    pub kernel: KernelSpec,
    pub domain: DomainSpec,
    pub metric: MetricKind,
    pub gamma: f64,
    /// Offsets along the first spatial coordinate, nondecreasing; an offset
    /// of zero contributes an exactly-zero estimate.
    pub offsets: Vec<f64>,
    pub n_reps: usize,
    pub p: usize,
    pub seed: u64,
}

impl RateExperiment {
    pub fn validate(&self) -> Result<()> {
        if self.metric == MetricKind::SupLog {
            return Err(SlgpError::InvalidParameter(
                "mean-power rates are defined for Hellinger, KL and TV".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SlgpError::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.n_reps < 100 {
            return Err(SlgpError::InvalidParameter(format!(
                "need at least 100 replicates, got {}",
                self.n_reps
            )));
        }
        if self.p == 0 {
            return Err(SlgpError::InvalidParameter("basis size p must be at least 1".into()));
        }
        if self.kernel.dim() != self.domain.dim() {
            return Err(SlgpError::DimensionMismatch {
                expected: self.domain.dim(),
                got: self.kernel.dim(),
            });
        }
        let center = self.domain.center_d();
        let (_, hi) = self.domain.bounds_d[0];
        for &h in &self.offsets {
            if !(h.is_finite() && h >= 0.0) {
                return Err(SlgpError::InvalidParameter(format!("invalid offset {h}")));
            }
            if center[0] + h > hi {
                return Err(SlgpError::OutsideDomain(format!(
                    "offset {h} leaves the spatial box from the center"
                )));
            }
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(SlgpError::InvalidParameter("offsets must be nondecreasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateResult {
    pub metric: MetricKind,
    pub gamma: f64,
    pub offsets: Vec<f64>,
    /// Monte Carlo estimates of `E[D^gamma]` per offset.
    pub estimates: Vec<f64>,
    /// CLT standard errors of the estimates.
    pub std_errors: Vec<f64>,
    pub theoretical_exponent: f64,
    pub n_reps: usize,
}

/// Exponent of the theoretical small-lag bound: `gamma * alpha1 / 2` for
/// Hellinger, `gamma * alpha1` for KL and TV.
pub fn theoretical_rate(metric: MetricKind, gamma: f64, alpha1: f64) -> Result<f64> {
    if !(gamma > 0.0 && alpha1 > 0.0) {
        return Err(SlgpError::InvalidParameter(format!(
            "gamma and alpha1 must be positive, got {gamma}, {alpha1}"
        )));
    }
    match metric {
        MetricKind::Hellinger => Ok(gamma * alpha1 / 2.0),
        MetricKind::Kl | MetricKind::Tv => Ok(gamma * alpha1),
        MetricKind::SupLog => Err(SlgpError::InvalidParameter(
            "no mean-power rate is stated for the sup-log distance".into(),
        )),
    }
}

/// Run the experiment for the metric named in `exp`.
pub fn simulate_mean_power(exp: &RateExperiment, grid: &QuadratureGrid) -> Result<RateResult> {
    let mut results = simulate_mean_power_multi(exp, &[exp.metric], grid)?;
    Ok(results.pop().expect("one metric requested"))
}

/// Run the experiment once and evaluate several metrics on the same replicate
/// draws. Deterministic per seed; replicates are reduced in index order.
pub fn simulate_mean_power_multi(
    exp: &RateExperiment,
    metrics: &[MetricKind],
    grid: &QuadratureGrid,
) -> Result<Vec<RateResult>> {
    exp.validate()?;
    for m in metrics {
        if *m == MetricKind::SupLog {
            return Err(SlgpError::InvalidParameter(
                "mean-power rates are defined for Hellinger, KL and TV".into(),
            ));
        }
    }
    let center = exp.domain.center_d();
    let n_off = exp.offsets.len();
    let n_met = metrics.len();

    // per replicate: powers[metric][offset]
    let per_rep: Vec<Vec<Vec<f64>>> = (0..exp.n_reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<Vec<f64>>> {
            let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
            rng.set_stream(REPLICATE_STREAM_BASE + r as u64);
            let basis_seed: u64 = rng.random();
            let basis = build_basis(&exp.kernel, &exp.domain, exp.p, basis_seed)?;
            let phases = ResponsePhases::new(&basis, grid.nodes())?;
            let eps = draw_prior_weights(basis.feature_dim(), &mut rng);

            let z0 = phases.z_slice(&basis, &eps, &center)?;
            let base = slogt_values(&z0, grid, &center)?;
            let mut powers = vec![vec![0.0; n_off]; n_met];
            let mut loc = center.clone();
            for (k, &h) in exp.offsets.iter().enumerate() {
                loc[0] = center[0] + h;
                let z = phases.z_slice(&basis, &eps, &loc)?;
                let slice = slogt_values(&z, grid, &loc)?;
                for (j, metric) in metrics.iter().enumerate() {
                    let d = divergence(*metric, &base, &slice, grid)?;
                    powers[j][k] = d.powf(exp.gamma);
                }
            }
            Ok(powers)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(n_met);
    for (j, metric) in metrics.iter().enumerate() {
        let mut estimates = vec![0.0; n_off];
        let mut sq = vec![0.0; n_off];
        for rep in &per_rep {
            for k in 0..n_off {
                estimates[k] += rep[j][k];
                sq[k] += rep[j][k] * rep[j][k];
            }
        }
        let n = exp.n_reps as f64;
        let mut std_errors = vec![0.0; n_off];
        for k in 0..n_off {
            estimates[k] /= n;
            let var = (sq[k] / n - estimates[k] * estimates[k]).max(0.0) * n / (n - 1.0);
            std_errors[k] = (var / n).sqrt();
        }
        out.push(RateResult {
            metric: *metric,
            gamma: exp.gamma,
            offsets: exp.offsets.clone(),
            estimates,
            std_errors,
            theoretical_exponent: theoretical_rate(*metric, exp.gamma, exp.kernel.holder_alpha1())?,
            n_reps: exp.n_reps,
        });
    }
    Ok(out)
}

/// Least-squares slope of `log(estimate)` against `log(offset)` over the
/// offsets inside `fit_range` (inclusive). Needs at least four offsets with
/// strictly positive estimates.
pub fn fit_rate_slope(result: &RateResult, fit_range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = fit_range;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (h, est) in result.offsets.iter().zip(&result.estimates) {
        if *h >= lo && *h <= hi {
            if *h <= 0.0 {
                return Err(SlgpError::InvalidParameter(
                    "zero offset cannot enter a log-log fit".into(),
                ));
            }
            if *est <= 0.0 {
                return Err(SlgpError::Numeric(format!(
                    "nonpositive estimate {est} at offset {h} in fit range"
                )));
            }
            xs.push(h.ln());
            ys.push(est.ln());
        }
    }
    if xs.len() < 4 {
        return Err(SlgpError::InvalidParameter(format!(
            "need at least 4 offsets in the fit range, found {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        return Err(SlgpError::Numeric("degenerate offsets in fit range".into()));
    }
    Ok(num / den)
}
