//! The spatial logistic density transform and per-slice summaries.
//!
//! A slice is the normalized density over the response grid at one spatial
//! location. Normalization is done in log space with a weight-aware
//! log-sum-exp, so the transform is invariant to per-location shifts of the
//! field and safe for large variance.

use ndarray::Array1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlgpError};
use crate::grid::{logsumexp_weighted, QuadratureGrid};
use crate::rff::{ResponsePhases, RffBasis, WeightVector};

/// Density values over the response grid at a fixed location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySlice {
    pub location: Vec<f64>,
    pub values: Array1<f64>,
}

impl DensitySlice {
    /// `sum_i w_i v_i - 1`, the quadrature normalization defect.
    pub fn normalization_error(&self, grid: &QuadratureGrid) -> f64 {
        self.values.dot(grid.weights()) - 1.0
    }

    pub fn check_grid(&self, grid: &QuadratureGrid) -> Result<()> {
        if self.values.len() != grid.len() {
            return Err(SlgpError::GridMismatch(format!(
                "slice has {} values, grid has {} nodes",
                self.values.len(),
                grid.len()
            )));
        }
        Ok(())
    }
}

/// Normalize log-density values over the grid: `v_i = exp(z_i - lse_w(z))`.
pub fn slogt_values(z: &Array1<f64>, grid: &QuadratureGrid, location: &[f64]) -> Result<DensitySlice> {
    if z.len() != grid.len() {
        return Err(SlgpError::GridMismatch(format!(
            "field has {} values, grid has {} nodes",
            z.len(),
            grid.len()
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(SlgpError::Numeric("non-finite field value in slogt".into()));
    }
    let lse = logsumexp_weighted(z, grid.weights());
    Ok(DensitySlice { location: location.to_vec(), values: z.mapv(|zi| (zi - lse).exp()) })
}

/// Evaluate the finite-rank GP over the grid at `x` and normalize.
pub fn slogt_field(
    basis: &RffBasis,
    eps: &WeightVector,
    x: &[f64],
    grid: &QuadratureGrid,
) -> Result<DensitySlice> {
    let phases = ResponsePhases::new(basis, grid.nodes())?;
    slogt_field_with_phases(basis, &phases, eps, x, grid)
}

/// As `slogt_field`, reusing precomputed response phases across calls.
pub fn slogt_field_with_phases(
    basis: &RffBasis,
    phases: &ResponsePhases,
    eps: &WeightVector,
    x: &[f64],
    grid: &QuadratureGrid,
) -> Result<DensitySlice> {
    basis.domain().check_location(x)?;
    let z = phases.z_slice(basis, eps, x)?;
    slogt_values(&z, grid, x)
}

/// Moments and (for a 1-d response) quantiles of one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSummary {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// `(prob, value)` pairs, nondecreasing in prob; empty unless `d_t == 1`.
    pub quantiles: Vec<(f64, f64)>,
}

/// Quadrature moments for any response dimension; quantiles by monotone
/// linear interpolation of the cumulative-trapezoid CDF when `d_t == 1`.
pub fn summarize(slice: &DensitySlice, grid: &QuadratureGrid, probs: &[f64]) -> Result<SliceSummary> {
    slice.check_grid(grid)?;
    for &p in probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(SlgpError::InvalidParameter(format!(
                "quantile prob {p} outside (0, 1)"
            )));
        }
    }
    let mass: Vec<f64> = slice
        .values
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| v * w)
        .collect();
    let d_t = grid.d_t();
    let mut mean = vec![0.0; d_t];
    for (i, m) in mass.iter().enumerate() {
        for (k, mu) in mean.iter_mut().enumerate() {
            *mu += m * grid.nodes()[(i, k)];
        }
    }
    let total: f64 = mass.iter().sum();
    for mu in &mut mean {
        *mu /= total;
    }
    let mut variance = vec![0.0; d_t];
    for (i, m) in mass.iter().enumerate() {
        for (k, var) in variance.iter_mut().enumerate() {
            let d = grid.nodes()[(i, k)] - mean[k];
            *var += m * d * d;
        }
    }
    for var in &mut variance {
        *var /= total;
    }

    let mut quantiles = Vec::with_capacity(probs.len());
    if !probs.is_empty() {
        if d_t != 1 {
            return Err(SlgpError::GridMismatch(
                "quantiles require a 1-d response grid".into(),
            ));
        }
        let cdf = cumulative_trapezoid(&slice.values, grid)?;
        for &p in probs {
            quantiles.push((p, invert_cdf(&cdf, grid, p)));
        }
    }
    Ok(SliceSummary { mean, variance, quantiles })
}

/// Cumulative trapezoid integral of the slice along a 1-d grid; starts at 0
/// and ends at the full quadrature mass.
fn cumulative_trapezoid(values: &Array1<f64>, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let axis = grid.axis_1d()?;
    let mut cdf = vec![0.0; axis.len()];
    for k in 1..axis.len() {
        cdf[k] = cdf[k - 1] + 0.5 * (axis[k] - axis[k - 1]) * (values[k] + values[k - 1]);
    }
    Ok(cdf)
}

/// Invert the piecewise-linear CDF at probability `p`; exact node hits break
/// toward the lower node.
fn invert_cdf(cdf: &[f64], grid: &QuadratureGrid, p: f64) -> f64 {
    let axis = grid.axis_1d().expect("1-d grid checked by caller");
    let total = *cdf.last().expect("nonempty grid");
    let target = p * total;
    let k = cdf.partition_point(|&c| c < target);
    if k == 0 {
        return axis[0];
    }
    if k >= cdf.len() {
        return *axis.last().expect("nonempty grid");
    }
    if cdf[k] == target {
        return axis[k];
    }
    let span = cdf[k] - cdf[k - 1];
    axis[k - 1] + (target - cdf[k - 1]) / span * (axis[k] - axis[k - 1])
}

/// Draw one response value from the slice by inverse-CDF sampling (1-d only).
pub fn sample_response<R: Rng + ?Sized>(
    slice: &DensitySlice,
    grid: &QuadratureGrid,
    rng: &mut R,
) -> Result<f64> {
    slice.check_grid(grid)?;
    let cdf = cumulative_trapezoid(&slice.values, grid)?;
    let u: f64 = rng.random();
    Ok(invert_cdf(&cdf, grid, u.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16)))
}
