//! Finite-dimensional posterior evaluation with analytic gradients.
//!
//! The log posterior is
//! `sum_i [z(x_i, t_i) - lse_w(z(x_i, .))] - |eps|^2 / 2`
//! with the normalizer discretized on the response grid. Observations are
//! grouped by distinct location; writing each frequency angle as the sum of a
//! location part and a response part turns every evaluation into a few dense
//! `n_loc x p` by `p x m` products, with all trigonometry precomputed.

use std::collections::HashMap;

use ndarray::{Array1, Array2, Axis, s};

use crate::dataset::Dataset;
use crate::error::{Result, SlgpError};
use crate::grid::QuadratureGrid;
use crate::rff::{RffBasis, WeightVector};

/// Precomputed quantities for repeated posterior evaluations against one
/// `(basis, dataset, grid)` triple. Immutable after construction.
pub struct PosteriorProblem {
    basis: RffBasis,
    grid: QuadratureGrid,
    n_obs: usize,
    /// records per distinct location
    counts: Array1<f64>,
    /// `n_loc x p` cos/sin of the spatial angles
    cos_a: Array2<f64>,
    sin_a: Array2<f64>,
    /// `p x m` cos/sin of the response-node angles
    cos_b: Array2<f64>,
    sin_b: Array2<f64>,
    /// `sum_i phi(x_i, t_i)`, the data part of the gradient
    obs_feature_sum: Array1<f64>,
}

impl PosteriorProblem {
    pub fn new(basis: &RffBasis, dataset: &Dataset, grid: &QuadratureGrid) -> Result<Self> {
        if grid.is_empty() {
            return Err(SlgpError::GridMismatch("empty response grid".into()));
        }
        if grid.d_t() != basis.domain().d_t() {
            return Err(SlgpError::DimensionMismatch {
                expected: basis.domain().d_t(),
                got: grid.d_t(),
            });
        }
        dataset.check_domain(basis.domain())?;
        let p = basis.p();
        let d_d = basis.domain().d_d();
        let d_t = basis.domain().d_t();

        // distinct locations by exact coordinate bytes
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut unique_rows: Vec<usize> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for i in 0..dataset.len() {
            let key: Vec<u64> =
                dataset.locations.row(i).iter().map(|v| v.to_bits()).collect();
            match index.get(&key) {
                Some(&l) => counts[l] += 1.0,
                None => {
                    index.insert(key, unique_rows.len());
                    unique_rows.push(i);
                    counts.push(1.0);
                }
            }
        }
        let n_loc = unique_rows.len();
        let mut locs = Array2::zeros((n_loc, d_d));
        for (l, &i) in unique_rows.iter().enumerate() {
            locs.row_mut(l).assign(&dataset.locations.row(i));
        }

        let freq = basis.frequencies();
        let spatial = freq.slice(s![.., ..d_d]);
        let response = freq.slice(s![.., d_d..]);
        let angles_a = locs.dot(&spatial.t());
        let angles_b = response.dot(&grid.nodes().t());

        let mut obs_feature_sum = Array1::zeros(2 * p);
        let mut point = vec![0.0; d_d + d_t];
        for i in 0..dataset.len() {
            point[..d_d].copy_from_slice(dataset.locations.row(i).as_slice().expect("row-major"));
            point[d_d..].copy_from_slice(dataset.responses.row(i).as_slice().expect("row-major"));
            obs_feature_sum += &basis.features(&point)?;
        }

        Ok(Self {
            basis: basis.clone(),
            grid: grid.clone(),
            n_obs: dataset.len(),
            counts: Array1::from(counts),
            cos_a: angles_a.mapv(f64::cos),
            sin_a: angles_a.mapv(f64::sin),
            cos_b: angles_b.mapv(f64::cos),
            sin_b: angles_b.mapv(f64::sin),
            obs_feature_sum,
        })
    }

    pub fn basis(&self) -> &RffBasis {
        &self.basis
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    fn check_weights(&self, eps: &WeightVector) -> Result<()> {
        if eps.len() != self.basis.feature_dim() {
            return Err(SlgpError::DimensionMismatch {
                expected: self.basis.feature_dim(),
                got: eps.len(),
            });
        }
        Ok(())
    }

    /// Collapse the weights against every location's spatial angles.
    fn collapse(&self, eps: &WeightVector) -> (Array2<f64>, Array2<f64>) {
        let p = self.basis.p();
        let ec = eps.slice(s![..p]);
        let es = eps.slice(s![p..]);
        let c = &self.cos_a * &ec + &self.sin_a * &es;
        let s = &self.cos_a * &es - &self.sin_a * &ec;
        (c, s)
    }

    /// GP values on the response grid for every distinct location.
    fn grid_values(&self, eps: &WeightVector) -> Array2<f64> {
        let (c, s) = self.collapse(eps);
        let mut z = c.dot(&self.cos_b);
        z += &s.dot(&self.sin_b);
        z *= self.basis.gp_scale();
        z
    }

    /// Row-wise weighted log-sum-exp of the grid values.
    fn normalizers(&self, z_grid: &Array2<f64>) -> Array1<f64> {
        let w = self.grid.weights();
        let mut out = Array1::zeros(z_grid.nrows());
        for (l, row) in z_grid.rows().into_iter().enumerate() {
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let sum: f64 = row.iter().zip(w).map(|(zi, wi)| wi * (zi - m).exp()).sum();
            out[l] = m + sum.ln();
        }
        out
    }

    /// Data log-likelihood alone (the quantity the pCN ratio uses).
    pub fn log_likelihood(&self, eps: &WeightVector) -> Result<f64> {
        self.check_weights(eps)?;
        if self.n_obs == 0 {
            return Ok(0.0);
        }
        let z_grid = self.grid_values(eps);
        let normalizers = self.normalizers(&z_grid);
        let data_term = self.basis.gp_scale() * self.obs_feature_sum.dot(eps);
        Ok(data_term - self.counts.dot(&normalizers))
    }

    /// Log posterior up to an additive constant.
    pub fn log_posterior(&self, eps: &WeightVector) -> Result<f64> {
        Ok(self.log_likelihood(eps)? - 0.5 * eps.dot(eps))
    }

    /// Log posterior and its gradient in one pass.
    pub fn log_posterior_and_grad(&self, eps: &WeightVector) -> Result<(f64, Array1<f64>)> {
        self.check_weights(eps)?;
        let scale = self.basis.gp_scale();
        if self.n_obs == 0 {
            return Ok((-0.5 * eps.dot(eps), -eps.clone()));
        }
        let z_grid = self.grid_values(eps);
        let normalizers = self.normalizers(&z_grid);
        let data_term = scale * self.obs_feature_sum.dot(eps);
        let logpost =
            data_term - self.counts.dot(&normalizers) - 0.5 * eps.dot(eps);

        // P[l, g] = count_l * w_g * density of slice l at node g
        let w = self.grid.weights();
        let mut masses = z_grid;
        for (l, mut row) in masses.rows_mut().into_iter().enumerate() {
            let norm = normalizers[l];
            let count = self.counts[l];
            for (v, wi) in row.iter_mut().zip(w) {
                *v = count * wi * (*v - norm).exp();
            }
        }
        let qc = masses.dot(&self.cos_b.t());
        let qs = masses.dot(&self.sin_b.t());
        let expected_cos = (&self.cos_a * &qc - &self.sin_a * &qs).sum_axis(Axis(0));
        let expected_sin = (&self.sin_a * &qc + &self.cos_a * &qs).sum_axis(Axis(0));

        let p = self.basis.p();
        let mut grad = Array1::zeros(2 * p);
        for j in 0..p {
            grad[j] = scale * (self.obs_feature_sum[j] - expected_cos[j]) - eps[j];
            grad[p + j] = scale * (self.obs_feature_sum[p + j] - expected_sin[j]) - eps[p + j];
        }
        Ok((logpost, grad))
    }
}

/// One-shot evaluation of the log posterior and gradient. Builds the
/// precomputed problem internally; use [`PosteriorProblem`] directly for
/// repeated evaluations.
pub fn log_posterior_and_grad(
    basis: &RffBasis,
    eps: &WeightVector,
    dataset: &Dataset,
    grid: &QuadratureGrid,
) -> Result<(f64, Array1<f64>)> {
    PosteriorProblem::new(basis, dataset, grid)?.log_posterior_and_grad(eps)
}
