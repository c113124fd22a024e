//! Stationary covariance kernels on the product space, their canonical
//! semi-distance and increment kernel, and spectral frequency sampling.
//!
//! All kernels are ARD: the lag is rescaled coordinate-wise by the
//! lengthscales before the isotropic profile is applied. The spectral sampler
//! draws from the normalized spectral measure in the angular-frequency
//! convention fixed by `E[cos(w . lag)] = k(lag) / variance`, which is the
//! convention the random-feature construction relies on.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlgpError};

/// Radicands of the canonical semi-distance more negative than this are
/// treated as a numeric failure instead of rounding noise.
const SEMIDISTANCE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaternSmoothness {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternSmoothness {
    pub fn nu(self) -> f64 {
        match self {
            MaternSmoothness::Half => 0.5,
            MaternSmoothness::ThreeHalves => 1.5,
            MaternSmoothness::FiveHalves => 2.5,
        }
    }

    pub fn from_nu(nu: f64) -> Result<Self> {
        if nu == 0.5 {
            Ok(MaternSmoothness::Half)
        } else if nu == 1.5 {
            Ok(MaternSmoothness::ThreeHalves)
        } else if nu == 2.5 {
            Ok(MaternSmoothness::FiveHalves)
        } else {
            Err(SlgpError::InvalidParameter(format!(
                "unsupported Matern smoothness nu={nu}; use 0.5, 1.5 or 2.5"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Matern(MaternSmoothness),
    SquaredExponential,
}

/// A stationary ARD kernel: family, variance at lag zero and per-dimension
/// lengthscales over the full product space (spatial dims first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpecRepr", into = "KernelSpecRepr")]
pub struct KernelSpec {
    family: KernelFamily,
    variance: f64,
    lengthscales: Vec<f64>,
}

/// Flat JSON form: `{family, nu, variance, lengthscales}`.
#[derive(Serialize, Deserialize)]
struct KernelSpecRepr {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    variance: f64,
    lengthscales: Vec<f64>,
}

impl TryFrom<KernelSpecRepr> for KernelSpec {
    type Error = SlgpError;

    fn try_from(r: KernelSpecRepr) -> Result<Self> {
        let family = match r.family.as_str() {
            "matern" => {
                let nu = r.nu.ok_or_else(|| {
                    SlgpError::InvalidParameter("matern kernel requires a nu field".into())
                })?;
                KernelFamily::Matern(MaternSmoothness::from_nu(nu)?)
            }
            "squared_exponential" => KernelFamily::SquaredExponential,
            other => {
                return Err(SlgpError::InvalidParameter(format!(
                    "unknown kernel family '{other}'"
                )))
            }
        };
        KernelSpec::new(family, r.variance, r.lengthscales)
    }
}

impl From<KernelSpec> for KernelSpecRepr {
    fn from(k: KernelSpec) -> Self {
        let (family, nu) = match k.family {
            KernelFamily::Matern(s) => ("matern".to_string(), Some(s.nu())),
            KernelFamily::SquaredExponential => ("squared_exponential".to_string(), None),
        };
        KernelSpecRepr { family, nu, variance: k.variance, lengthscales: k.lengthscales }
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(SlgpError::InvalidParameter(format!(
                "variance must be positive, got {variance}"
            )));
        }
        if lengthscales.is_empty() || lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(SlgpError::InvalidParameter(format!(
                "lengthscales must be nonempty and positive, got {lengthscales:?}"
            )));
        }
        Ok(Self { family, variance, lengthscales })
    }

    pub fn matern(smoothness: MaternSmoothness, variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        Self::new(KernelFamily::Matern(smoothness), variance, lengthscales)
    }

    pub fn squared_exponential(variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        Self::new(KernelFamily::SquaredExponential, variance, lengthscales)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    /// Same family and variance, new lengthscales. Used by the grid search.
    pub fn with_lengthscales(&self, lengthscales: Vec<f64>) -> Result<Self> {
        Self::new(self.family, self.variance, lengthscales)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Spatial Hoelder exponent of the squared canonical semi-distance.
    ///
    /// The exponential profile gives `d_k^2 = O(|lag|)`; every once- or
    /// twice-differentiable profile used here is Lipschitz in the squared lag
    /// on compacts, hence exponent 2.
    pub fn holder_alpha1(&self) -> f64 {
        match self.family {
            KernelFamily::Matern(MaternSmoothness::Half) => 1.0,
            _ => 2.0,
        }
    }

    /// Response-direction exponent; identical to `holder_alpha1` because the
    /// profiles are isotropic in the rescaled lag.
    pub fn holder_alpha2(&self) -> f64 {
        self.holder_alpha1()
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(SlgpError::DimensionMismatch { expected: self.dim(), got: y.len() });
        }
        Ok(())
    }

    /// Lengthscale-rescaled Euclidean lag between two points.
    fn scaled_distance(&self, y: &[f64], y2: &[f64]) -> f64 {
        y.iter()
            .zip(y2)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Isotropic profile at rescaled lag `r`, including the variance factor.
    pub fn profile(&self, r: f64) -> f64 {
        let c = match self.family {
            KernelFamily::Matern(MaternSmoothness::Half) => (-r).exp(),
            KernelFamily::Matern(MaternSmoothness::ThreeHalves) => {
                let a = 3.0_f64.sqrt() * r;
                (1.0 + a) * (-a).exp()
            }
            KernelFamily::Matern(MaternSmoothness::FiveHalves) => {
                let a = 5.0_f64.sqrt() * r;
                (1.0 + a + 5.0 * r * r / 3.0) * (-a).exp()
            }
            KernelFamily::SquaredExponential => (-0.5 * r * r).exp(),
        };
        self.variance * c
    }

    /// Covariance between two points of the product space.
    pub fn eval(&self, y: &[f64], y2: &[f64]) -> Result<f64> {
        self.check_dim(y)?;
        self.check_dim(y2)?;
        Ok(self.profile(self.scaled_distance(y, y2)))
    }

    /// Canonical semi-distance `sqrt(k(y,y) + k(y2,y2) - 2 k(y,y2))`.
    pub fn canonical_semidistance(&self, y: &[f64], y2: &[f64]) -> Result<f64> {
        let radicand = 2.0 * (self.variance - self.eval(y, y2)?);
        if radicand < -SEMIDISTANCE_SLACK {
            return Err(SlgpError::Numeric(format!(
                "negative semi-distance radicand {radicand}"
            )));
        }
        Ok(radicand.max(0.0).sqrt())
    }

    /// Covariance of the response increments `Z(x,t1) - Z(x,t2)` and
    /// `Z(x2,u1) - Z(x2,u2)`: the four-term combination of the base kernel.
    pub fn increment_kernel(
        &self,
        x: &[f64],
        t1: &[f64],
        t2: &[f64],
        x2: &[f64],
        u1: &[f64],
        u2: &[f64],
    ) -> Result<f64> {
        let d_t = t1.len();
        if t2.len() != d_t || u1.len() != d_t || u2.len() != d_t {
            return Err(SlgpError::DimensionMismatch { expected: d_t, got: t2.len().max(u1.len()).max(u2.len()) });
        }
        if x.len() != x2.len() || x.len() + d_t != self.dim() {
            return Err(SlgpError::DimensionMismatch { expected: self.dim(), got: x.len() + d_t });
        }
        let join = |a: &[f64], b: &[f64]| {
            let mut v = Vec::with_capacity(a.len() + b.len());
            v.extend_from_slice(a);
            v.extend_from_slice(b);
            v
        };
        let k11 = self.eval(&join(x, t1), &join(x2, u1))?;
        let k22 = self.eval(&join(x, t2), &join(x2, u2))?;
        let k12 = self.eval(&join(x, t1), &join(x2, u2))?;
        let k21 = self.eval(&join(x, t2), &join(x2, u1))?;
        // grouped so degenerate increments (t1 == t2) cancel exactly
        Ok((k11 - k21) + (k22 - k12))
    }

    /// Draw `n` i.i.d. frequencies from the normalized spectral measure, with
    /// the lengthscales folded in coordinate-wise. Deterministic per seed.
    ///
    /// Matern frequencies are multivariate Student-t with `2 nu` degrees of
    /// freedom (one chi-square denominator shared across coordinates);
    /// squared-exponential frequencies are standard normal. Both are then
    /// divided coordinate-wise by the lengthscales.
    pub fn spectral_sample(&self, n: usize, seed: u64) -> Result<Array2<f64>> {
        if n == 0 {
            return Err(SlgpError::InvalidParameter("need at least one frequency".into()));
        }
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Array2::zeros((n, d));
        match self.family {
            KernelFamily::SquaredExponential => {
                for mut row in out.rows_mut() {
                    for (v, l) in row.iter_mut().zip(&self.lengthscales) {
                        let g: f64 = rng.sample(StandardNormal);
                        *v = g / l;
                    }
                }
            }
            KernelFamily::Matern(s) => {
                let chi = ChiSquared::new(2.0 * s.nu()).expect("positive dof");
                for mut row in out.rows_mut() {
                    let gs: Vec<f64> =
                        (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let denom: f64 = rng.sample(chi);
                    let scale = (2.0 * s.nu() / denom).sqrt();
                    for ((v, g), l) in row.iter_mut().zip(&gs).zip(&self.lengthscales) {
                        *v = g * scale / l;
                    }
                }
            }
        }
        Ok(out)
    }
}
