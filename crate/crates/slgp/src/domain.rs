//! Box domains for the spatial index and the response.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlgpError};

/// Product of two closed boxes: a spatial index box of dimension `d_d` and a
/// response box of dimension `d_t`. All model evaluations live in the product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Per-dimension `(lower, upper)` intervals of the spatial box.
    pub bounds_d: Vec<(f64, f64)>,
    /// Per-dimension `(lower, upper)` intervals of the response box.
    pub bounds_t: Vec<(f64, f64)>,
}

impl DomainSpec {
    pub fn new(bounds_d: Vec<(f64, f64)>, bounds_t: Vec<(f64, f64)>) -> Result<Self> {
        if bounds_d.is_empty() || bounds_t.is_empty() {
            return Err(SlgpError::InvalidParameter(
                "domain needs at least one spatial and one response dimension".into(),
            ));
        }
        for &(lo, hi) in bounds_d.iter().chain(bounds_t.iter()) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SlgpError::InvalidParameter(format!(
                    "interval [{lo}, {hi}] must be finite with lower < upper"
                )));
            }
        }
        Ok(Self { bounds_d, bounds_t })
    }

    /// Unit boxes `[0,1]^d_d x [0,1]^d_t`, the shape every rescaled dataset uses.
    pub fn unit(d_d: usize, d_t: usize) -> Result<Self> {
        Self::new(vec![(0.0, 1.0); d_d], vec![(0.0, 1.0); d_t])
    }

    pub fn d_d(&self) -> usize {
        self.bounds_d.len()
    }

    pub fn d_t(&self) -> usize {
        self.bounds_t.len()
    }

    /// Total dimension of the product space.
    pub fn dim(&self) -> usize {
        self.d_d() + self.d_t()
    }

    /// Lebesgue volume of the response box.
    pub fn response_volume(&self) -> f64 {
        self.bounds_t.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Midpoint of the spatial box.
    pub fn center_d(&self) -> Vec<f64> {
        self.bounds_d.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn contains_location(&self, x: &[f64]) -> bool {
        x.len() == self.d_d() && in_box(x, &self.bounds_d)
    }

    pub fn contains_response(&self, t: &[f64]) -> bool {
        t.len() == self.d_t() && in_box(t, &self.bounds_t)
    }

    pub fn check_location(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d_d() {
            return Err(SlgpError::DimensionMismatch { expected: self.d_d(), got: x.len() });
        }
        if !in_box(x, &self.bounds_d) {
            return Err(SlgpError::OutsideDomain(format!("location {x:?}")));
        }
        Ok(())
    }
}

fn in_box(point: &[f64], bounds: &[(f64, f64)]) -> bool {
    point
        .iter()
        .zip(bounds)
        .all(|(v, (lo, hi))| v.is_finite() && *v >= *lo && *v <= *hi)
}
