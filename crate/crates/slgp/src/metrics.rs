//! Dissimilarities between densities and density fields on a shared grid.

use serde::{Deserialize, Serialize};

use crate::density::DensitySlice;
use crate::error::{Result, SlgpError};
use crate::grid::QuadratureGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Hellinger,
    Kl,
    Tv,
    SupLog,
}

fn check_pair(f: &DensitySlice, g: &DensitySlice, grid: &QuadratureGrid) -> Result<()> {
    f.check_grid(grid)?;
    g.check_grid(grid)
}

fn check_positive(slice: &DensitySlice, what: &str) -> Result<()> {
    if slice.values.iter().any(|v| *v <= 0.0) {
        return Err(SlgpError::InvalidParameter(format!(
            "{what} requires strictly positive densities"
        )));
    }
    Ok(())
}

/// Quadrature evaluation of the named divergence between two slices.
///
/// Hellinger is `sqrt(1/2 int (sqrt f - sqrt g)^2)`, KL is `int f log(f/g)`,
/// TV is `1/2 int |f - g|` and SupLog is `max |log f - log g|` over the grid.
pub fn divergence(
    kind: MetricKind,
    f: &DensitySlice,
    g: &DensitySlice,
    grid: &QuadratureGrid,
) -> Result<f64> {
    check_pair(f, g, grid)?;
    let w = grid.weights();
    match kind {
        MetricKind::Hellinger => {
            let mut acc = 0.0;
            for i in 0..grid.len() {
                let d = f.values[i].sqrt() - g.values[i].sqrt();
                acc += w[i] * d * d;
            }
            Ok((0.5 * acc).sqrt())
        }
        MetricKind::Kl => {
            check_positive(f, "KL")?;
            check_positive(g, "KL")?;
            let mut acc = 0.0;
            for i in 0..grid.len() {
                acc += w[i] * f.values[i] * (f.values[i] / g.values[i]).ln();
            }
            Ok(acc)
        }
        MetricKind::Tv => {
            let mut acc = 0.0;
            for i in 0..grid.len() {
                acc += w[i] * (f.values[i] - g.values[i]).abs();
            }
            Ok(0.5 * acc)
        }
        MetricKind::SupLog => {
            check_positive(f, "sup-log distance")?;
            check_positive(g, "sup-log distance")?;
            let mut acc: f64 = 0.0;
            for i in 0..grid.len() {
                acc = acc.max((f.values[i].ln() - g.values[i].ln()).abs());
            }
            Ok(acc)
        }
    }
}

/// Result of checking the exact-constant Hellinger bound
/// `d_H(f, g) <= h exp(h/2)` with `h = max |log f - log g|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HellingerBoundCheck {
    pub hellinger: f64,
    pub sup_log: f64,
    pub bound_satisfied: bool,
}

pub fn check_hellinger_bound(
    f: &DensitySlice,
    g: &DensitySlice,
    grid: &QuadratureGrid,
) -> Result<HellingerBoundCheck> {
    let hellinger = divergence(MetricKind::Hellinger, f, g, grid)?;
    let sup_log = divergence(MetricKind::SupLog, f, g, grid)?;
    let bound_satisfied = hellinger <= sup_log * (0.5 * sup_log).exp() + 1e-10;
    Ok(HellingerBoundCheck { hellinger, sup_log, bound_satisfied })
}

/// Whole-field dissimilarity: square root of the spatially weighted average
/// of the per-slice squared Hellinger integrand,
/// `sqrt(1/2 sum_v wD_v sum_u wT_u (sqrt f - sqrt g)^2)`.
pub fn integrated_hellinger(
    field_f: &[DensitySlice],
    field_g: &[DensitySlice],
    d_weights: &[f64],
    t_grid: &QuadratureGrid,
) -> Result<f64> {
    if field_f.len() != field_g.len() || field_f.len() != d_weights.len() {
        return Err(SlgpError::GridMismatch(format!(
            "field sizes disagree: {} vs {} slices, {} spatial weights",
            field_f.len(),
            field_g.len(),
            d_weights.len()
        )));
    }
    let w = t_grid.weights();
    let mut acc = 0.0;
    for ((f, g), wd) in field_f.iter().zip(field_g).zip(d_weights) {
        check_pair(f, g, t_grid)?;
        let mut inner = 0.0;
        for i in 0..t_grid.len() {
            let d = f.values[i].sqrt() - g.values[i].sqrt();
            inner += w[i] * d * d;
        }
        acc += wd * 0.5 * inner;
    }
    Ok(acc.sqrt())
}
