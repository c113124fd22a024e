//! Random-Fourier-feature bases and finite-rank GP evaluation.
//!
//! A basis holds `p` spectral frequencies with the kernel lengthscales folded
//! in, so feature evaluation never divides by a lengthscale. Features come in
//! cos/sin pairs, which makes the feature norm exactly `p` at every point and
//! the approximate kernel exact at lag zero.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Result, SlgpError};
use crate::kernel::KernelSpec;

/// Weights of a finite-rank GP; the prior is i.i.d. standard normal.
pub type WeightVector = Array1<f64>;

/// Draw a prior weight vector of the given length.
pub fn draw_prior_weights<R: Rng + ?Sized>(len: usize, rng: &mut R) -> WeightVector {
    Array1::from_iter((0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// A sampled Fourier basis: `p` frequencies over the product space, defining
/// a feature map of dimension `2p` and a finite-rank GP with variance
/// `variance` at every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffBasis {
    p: usize,
    seed: u64,
    variance: f64,
    domain: DomainSpec,
    /// `p x (d_d + d_t)` lengthscale-scaled frequencies.
    frequencies: Array2<f64>,
}

/// Build a basis by spectral sampling; deterministic per seed.
pub fn build_basis(spec: &KernelSpec, domain: &DomainSpec, p: usize, seed: u64) -> Result<RffBasis> {
    if p == 0 {
        return Err(SlgpError::InvalidParameter("basis size p must be at least 1".into()));
    }
    if spec.dim() != domain.dim() {
        return Err(SlgpError::DimensionMismatch { expected: domain.dim(), got: spec.dim() });
    }
    let frequencies = spec.spectral_sample(p, seed)?;
    Ok(RffBasis { p, seed, variance: spec.variance(), domain: domain.clone(), frequencies })
}

impl RffBasis {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn frequencies(&self) -> ArrayView2<'_, f64> {
        self.frequencies.view()
    }

    /// Feature dimension, `2p`.
    pub fn feature_dim(&self) -> usize {
        2 * self.p
    }

    /// Scale factor `sigma / sqrt(p)` applied to the feature/weight product.
    pub fn gp_scale(&self) -> f64 {
        (self.variance / self.p as f64).sqrt()
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.domain.dim() {
            return Err(SlgpError::DimensionMismatch { expected: self.domain.dim(), got: y.len() });
        }
        Ok(())
    }

    fn check_weights(&self, eps: &ArrayView1<f64>) -> Result<()> {
        if eps.len() != self.feature_dim() {
            return Err(SlgpError::DimensionMismatch {
                expected: self.feature_dim(),
                got: eps.len(),
            });
        }
        Ok(())
    }

    /// Feature vector `[cos(w_1 . y), .., cos(w_p . y), sin(w_1 . y), ..]`.
    pub fn features(&self, y: &[f64]) -> Result<Array1<f64>> {
        self.check_point(y)?;
        let mut out = Array1::zeros(2 * self.p);
        for (j, w) in self.frequencies.rows().into_iter().enumerate() {
            let angle: f64 = w.iter().zip(y).map(|(a, b)| a * b).sum();
            out[j] = angle.cos();
            out[self.p + j] = angle.sin();
        }
        Ok(out)
    }

    /// Dense feature matrix for a batch of points, one row per point.
    pub fn feature_matrix(&self, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if points.ncols() != self.domain.dim() {
            return Err(SlgpError::DimensionMismatch {
                expected: self.domain.dim(),
                got: points.ncols(),
            });
        }
        let mut out = Array2::zeros((points.nrows(), 2 * self.p));
        for (i, pt) in points.rows().into_iter().enumerate() {
            for (j, w) in self.frequencies.rows().into_iter().enumerate() {
                let angle: f64 = w.iter().zip(pt.iter()).map(|(a, b)| a * b).sum();
                out[(i, j)] = angle.cos();
                out[(i, self.p + j)] = angle.sin();
            }
        }
        Ok(out)
    }

    /// Monte Carlo kernel approximation `(variance / p) <phi(y), phi(y2)>`.
    /// Equals `variance` exactly when `y == y2`.
    pub fn approx_kernel(&self, y: &[f64], y2: &[f64]) -> Result<f64> {
        let fy = self.features(y)?;
        let fy2 = self.features(y2)?;
        Ok(self.variance / self.p as f64 * fy.dot(&fy2))
    }

    /// Finite-rank GP value `(sigma / sqrt(p)) <phi(y), eps>`; linear in `eps`.
    pub fn gp_eval(&self, eps: &WeightVector, y: &[f64]) -> Result<f64> {
        self.check_weights(&eps.view())?;
        let f = self.features(y)?;
        Ok(self.gp_scale() * f.dot(eps))
    }

    /// Angles of the spatial frequency block at a location, `a_j = w_j^D . x`.
    pub fn location_angles(&self, x: &[f64]) -> Result<Array1<f64>> {
        let d_d = self.domain.d_d();
        if x.len() != d_d {
            return Err(SlgpError::DimensionMismatch { expected: d_d, got: x.len() });
        }
        let spatial = self.frequencies.slice(ndarray::s![.., ..d_d]);
        Ok(spatial.dot(&ArrayView1::from(x)))
    }

    /// Collapse weights against the location angles: writing the full angle as
    /// `a_j + b_j(t)`, the GP over the response slice becomes
    /// `z(t) = scale * sum_j c_j cos(b_j(t)) + s_j sin(b_j(t))` with the
    /// returned `(c, s)` pair.
    pub fn collapse_weights(&self, eps: &WeightVector, x: &[f64]) -> Result<(Array1<f64>, Array1<f64>)> {
        self.check_weights(&eps.view())?;
        let angles = self.location_angles(x)?;
        let mut c = Array1::zeros(self.p);
        let mut s = Array1::zeros(self.p);
        for j in 0..self.p {
            let (sin_a, cos_a) = angles[j].sin_cos();
            let ec = eps[j];
            let es = eps[self.p + j];
            c[j] = ec * cos_a + es * sin_a;
            s[j] = es * cos_a - ec * sin_a;
        }
        Ok((c, s))
    }
}

/// Response-direction phases precomputed on a fixed set of response nodes.
///
/// Shared by every location and every weight draw that evaluates on the same
/// grid, so slice evaluation reduces to a small matrix product.
#[derive(Debug, Clone)]
pub struct ResponsePhases {
    /// `p x m` cosines of `w_j^T . t_g`.
    cos_t: Array2<f64>,
    /// `p x m` sines of `w_j^T . t_g`.
    sin_t: Array2<f64>,
}

impl ResponsePhases {
    pub fn new(basis: &RffBasis, t_nodes: ArrayView2<'_, f64>) -> Result<Self> {
        let d_d = basis.domain.d_d();
        let d_t = basis.domain.d_t();
        if t_nodes.ncols() != d_t {
            return Err(SlgpError::DimensionMismatch { expected: d_t, got: t_nodes.ncols() });
        }
        let resp = basis.frequencies.slice(ndarray::s![.., d_d..]);
        let angles = resp.dot(&t_nodes.t());
        Ok(Self { cos_t: angles.mapv(f64::cos), sin_t: angles.mapv(f64::sin) })
    }

    pub fn n_nodes(&self) -> usize {
        self.cos_t.ncols()
    }

    /// GP values over the response nodes at one location.
    pub fn z_slice(&self, basis: &RffBasis, eps: &WeightVector, x: &[f64]) -> Result<Array1<f64>> {
        let (c, s) = basis.collapse_weights(eps, x)?;
        let mut z = self.cos_t.t().dot(&c);
        z += &self.sin_t.t().dot(&s);
        z *= basis.gp_scale();
        Ok(z)
    }

    /// GP values over the response nodes for a batch of weight draws
    /// (one row per draw) at one location.
    pub fn z_slices_batch(
        &self,
        basis: &RffBasis,
        draws: ArrayView2<'_, f64>,
        x: &[f64],
    ) -> Result<Array2<f64>> {
        if draws.ncols() != basis.feature_dim() {
            return Err(SlgpError::DimensionMismatch {
                expected: basis.feature_dim(),
                got: draws.ncols(),
            });
        }
        let angles = basis.location_angles(x)?;
        let cos_a = angles.mapv(f64::cos);
        let sin_a = angles.mapv(f64::sin);
        let p = basis.p;
        let ec = draws.slice(ndarray::s![.., ..p]);
        let es = draws.slice(ndarray::s![.., p..]);
        let c = &ec * &cos_a + &es * &sin_a;
        let s = &es * &cos_a - &ec * &sin_a;
        let mut z = c.dot(&self.cos_t);
        z += &s.dot(&self.sin_t);
        z *= basis.gp_scale();
        Ok(z)
    }
}

/// Column sums of a feature matrix; the fixed part of the likelihood gradient.
pub fn feature_column_sums(features: &Array2<f64>) -> Array1<f64> {
    features.sum_axis(Axis(0))
}
