//! Tensor-product trapezoid quadrature over the response box.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Result, SlgpError};

/// Regular grid on the response box with trapezoid weights. The weights sum
/// to the box volume; nodes are stored row-major with the last response
/// dimension varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    node_counts: Vec<usize>,
    bounds: Vec<(f64, f64)>,
    nodes: Array2<f64>,
    weights: Array1<f64>,
}

/// Build the tensor-product trapezoid rule with `m[k] >= 2` nodes along each
/// response dimension.
pub fn build_grid(domain: &DomainSpec, m: &[usize]) -> Result<QuadratureGrid> {
    if m.len() != domain.d_t() {
        return Err(SlgpError::DimensionMismatch { expected: domain.d_t(), got: m.len() });
    }
    if m.iter().any(|&c| c < 2) {
        return Err(SlgpError::InvalidParameter(format!(
            "need at least 2 nodes per dimension, got {m:?}"
        )));
    }
    let bounds = domain.bounds_t.clone();
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .zip(m)
        .map(|((lo, hi), &count)| {
            let h = (hi - lo) / (count - 1) as f64;
            (0..count).map(|i| lo + i as f64 * h).collect()
        })
        .collect();
    let axis_weights: Vec<Vec<f64>> = bounds
        .iter()
        .zip(m)
        .map(|((lo, hi), &count)| {
            let h = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == 0 || i == count - 1 { 0.5 * h } else { h })
                .collect()
        })
        .collect();
    let total: usize = m.iter().product();
    let d_t = m.len();
    let mut nodes = Array2::zeros((total, d_t));
    let mut weights = Array1::zeros(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut w = 1.0;
        for k in (0..d_t).rev() {
            let idx = rem % m[k];
            rem /= m[k];
            nodes[(flat, k)] = axes[k][idx];
            w *= axis_weights[k][idx];
        }
        weights[flat] = w;
    }
    Ok(QuadratureGrid { node_counts: m.to_vec(), bounds, nodes, weights })
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn d_t(&self) -> usize {
        self.node_counts.len()
    }

    pub fn node_counts(&self) -> &[usize] {
        &self.node_counts
    }

    pub fn nodes(&self) -> ArrayView2<'_, f64> {
        self.nodes.view()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        self.nodes.row(i).to_slice().expect("row-major grid")
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Axis coordinates of the single response dimension; errors otherwise.
    pub fn axis_1d(&self) -> Result<Vec<f64>> {
        if self.d_t() != 1 {
            return Err(SlgpError::GridMismatch(format!(
                "operation needs a 1-d response grid, got {}-d",
                self.d_t()
            )));
        }
        Ok(self.nodes.column(0).to_vec())
    }
}

/// Log of the weighted sum of exponentials, `log sum_i w_i exp(z_i)`, guarded
/// against overflow by shifting with the max entry.
pub fn logsumexp_weighted(z: &Array1<f64>, weights: &Array1<f64>) -> f64 {
    debug_assert_eq!(z.len(), weights.len());
    let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    let sum: f64 = z.iter().zip(weights).map(|(zi, wi)| wi * (zi - m).exp()).sum();
    m + sum.ln()
}
