//! Posterior density prediction at new locations.
//!
//! Every retained weight draw is pushed through the density transform at the
//! requested location; the mean slice, pointwise bands and quantile summaries
//! are empirical statistics over those draws.

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::density::{slogt_values, summarize, DensitySlice};
use crate::error::{Result, SlgpError};
use crate::grid::QuadratureGrid;
use crate::rff::{ResponsePhases, RffBasis};

use super::pcn::PosteriorSamples;

/// Pointwise empirical band over posterior draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBand {
    pub prob: f64,
    pub values: Vec<f64>,
}

/// Posterior summary of one response quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub prob: f64,
    /// Mean of the per-draw quantile.
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPrediction {
    pub location: Vec<f64>,
    /// Draw-average density; integrates to one by linearity.
    pub mean: DensitySlice,
    pub draws: Vec<DensitySlice>,
    pub bands: Vec<PredictionBand>,
    pub quantiles: Vec<QuantileSummary>,
}

/// Probabilities used for the pointwise bands and the quantile-summary
/// spread; the draw-ensemble 10% / 90% levels.
pub const BAND_PROBS: (f64, f64) = (0.1, 0.9);

/// Empirical quantile of a sample with linear interpolation between order
/// statistics.
fn empirical_quantile(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = prob * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Predict the density at `x` from retained posterior draws.
pub fn predict_density(
    basis: &RffBasis,
    samples: &PosteriorSamples,
    x: &[f64],
    grid: &QuadratureGrid,
    probs: &[f64],
) -> Result<DensityPrediction> {
    predict_density_from_draws(basis, samples.draws.view(), x, grid, probs)
}

/// As [`predict_density`] but from a raw draw matrix (one row per draw).
pub fn predict_density_from_draws(
    basis: &RffBasis,
    draws: ArrayView2<'_, f64>,
    x: &[f64],
    grid: &QuadratureGrid,
    probs: &[f64],
) -> Result<DensityPrediction> {
    if draws.nrows() == 0 {
        return Err(SlgpError::InvalidParameter("no posterior draws to predict from".into()));
    }
    basis.domain().check_location(x)?;
    let phases = ResponsePhases::new(basis, grid.nodes())?;
    let z = phases.z_slices_batch(basis, draws, x)?;
    let n_draws = z.nrows();
    let m = grid.len();

    let mut slices = Vec::with_capacity(n_draws);
    let mut mean_values = Array1::<f64>::zeros(m);
    for row in z.rows() {
        let slice = slogt_values(&row.to_owned(), grid, x)?;
        mean_values += &slice.values;
        slices.push(slice);
    }
    mean_values /= n_draws as f64;
    let mean = DensitySlice { location: x.to_vec(), values: mean_values };

    let (lo_prob, hi_prob) = BAND_PROBS;
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut column = vec![0.0; n_draws];
    for g in 0..m {
        for (k, slice) in slices.iter().enumerate() {
            column[k] = slice.values[g];
        }
        column.sort_by(f64::total_cmp);
        lower[g] = empirical_quantile(&column, lo_prob);
        upper[g] = empirical_quantile(&column, hi_prob);
    }
    let bands = vec![
        PredictionBand { prob: lo_prob, values: lower },
        PredictionBand { prob: hi_prob, values: upper },
    ];

    let mut quantiles = Vec::with_capacity(probs.len());
    if !probs.is_empty() {
        let mut per_draw: Vec<Vec<f64>> = vec![Vec::with_capacity(n_draws); probs.len()];
        for slice in &slices {
            let summary = summarize(slice, grid, probs)?;
            for (k, (_, q)) in summary.quantiles.iter().enumerate() {
                per_draw[k].push(*q);
            }
        }
        for (k, &prob) in probs.iter().enumerate() {
            let vals = &mut per_draw[k];
            let mean_q = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.sort_by(f64::total_cmp);
            quantiles.push(QuantileSummary {
                prob,
                mean: mean_q,
                lower: empirical_quantile(vals, lo_prob),
                upper: empirical_quantile(vals, hi_prob),
            });
        }
    }

    Ok(DensityPrediction { location: x.to_vec(), mean, draws: slices, bands, quantiles })
}
