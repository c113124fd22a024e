//! MAP estimation by adaptive-step gradient ascent.
//!
//! The log posterior is strictly concave in the weights (affine field through
//! a log-sum-exp plus the Gaussian prior), so a first-order ascent with a
//! Barzilai-Borwein step and an Armijo backtracking safeguard is enough. The
//! accepted trace is monotone by construction.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlgpError};
use crate::rff::WeightVector;

use super::posterior::PosteriorProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapOptions {
    /// Convergence threshold on the gradient sup norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub weights: WeightVector,
    pub log_posterior: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted log-posterior values, starting at the initial point.
    pub trace: Vec<f64>,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const DIVERGENCE_RUN: usize = 50;

/// Maximize the log posterior from `init`. Deterministic given the inputs;
/// stops when the gradient sup norm falls below `tol` or after `max_iter`
/// accepted steps (reported through `converged`).
pub fn map_estimate(
    problem: &PosteriorProblem,
    init: &WeightVector,
    options: &MapOptions,
) -> Result<MapReport> {
    if !options.tol.is_finite() || options.tol <= 0.0 {
        return Err(SlgpError::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            options.tol
        )));
    }
    let mut eps = init.clone();
    let (mut lp, mut grad) = problem.log_posterior_and_grad(&eps)?;
    if !lp.is_finite() {
        return Err(SlgpError::Numeric("non-finite log posterior at init".into()));
    }
    let mut trace = vec![lp];
    let mut step = 1.0 / (1.0 + grad.dot(&grad).sqrt());
    let mut prev: Option<(Array1<f64>, Array1<f64>)> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut decreasing_run = 0usize;

    for _ in 0..options.max_iter {
        let grad_inf = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if grad_inf <= options.tol {
            converged = true;
            break;
        }
        // Barzilai-Borwein step from the last accepted pair
        if let Some((de, dg)) = &prev {
            let sy = de.dot(dg);
            let ss = de.dot(de);
            if sy.abs() > f64::MIN_POSITIVE && ss > 0.0 {
                step = (ss / sy).abs().clamp(1e-12, 1e6);
            }
        }
        let g2 = grad.dot(&grad);
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = &eps + &(t * &grad);
            let lp_new = problem.log_posterior(&cand)?;
            if lp_new.is_finite() && lp_new >= lp + ARMIJO_C * t * g2 {
                accepted = Some((cand, lp_new));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, lp_new)) = accepted else {
            break; // stalled at numerical precision
        };
        if lp_new < lp {
            decreasing_run += 1;
            if decreasing_run >= DIVERGENCE_RUN {
                return Err(SlgpError::Numeric(format!(
                    "ascent diverged: log posterior decreased over {DIVERGENCE_RUN} steps"
                )));
            }
        } else {
            decreasing_run = 0;
        }
        let (_, grad_new) = problem.log_posterior_and_grad(&cand)?;
        prev = Some((&cand - &eps, &grad_new - &grad));
        eps = cand;
        lp = lp_new;
        grad = grad_new;
        trace.push(lp);
        iterations += 1;
    }
    let grad_inf_norm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if !converged && grad_inf_norm <= options.tol {
        converged = true;
    }
    Ok(MapReport {
        weights: eps,
        log_posterior: lp,
        grad_inf_norm,
        iterations,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::domain::DomainSpec;
    use crate::grid::build_grid;
    use crate::kernel::KernelSpec;
    use crate::rff::{build_basis, draw_prior_weights};
    use ndarray::Array2;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_dataset_converges_to_prior_mode() {
        let domain = DomainSpec::unit(1, 1).unwrap();
        let spec = KernelSpec::squared_exponential(1.0, vec![0.4, 0.4]).unwrap();
        let basis = build_basis(&spec, &domain, 8, 3).unwrap();
        let grid = build_grid(&domain, &[21]).unwrap();
        let empty = Dataset::from_points(Array2::zeros((0, 1)), Array2::zeros((0, 1))).unwrap();
        let problem = PosteriorProblem::new(&basis, &empty, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let init = draw_prior_weights(16, &mut rng) * 3.0;
        let report = map_estimate(&problem, &init, &MapOptions::default()).unwrap();
        assert!(report.converged);
        let max_abs = report.weights.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max_abs <= 1e-6, "prior mode is zero, got sup norm {max_abs}");
    }

    #[test]
    fn ascent_trace_is_monotone_and_beats_init() {
        let domain = DomainSpec::unit(1, 1).unwrap();
        let spec = KernelSpec::squared_exponential(1.0, vec![0.3, 0.3]).unwrap();
        let basis = build_basis(&spec, &domain, 12, 7).unwrap();
        let grid = build_grid(&domain, &[41]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 80;
        let mut locations = Array2::zeros((n, 1));
        let mut responses = Array2::zeros((n, 1));
        for i in 0..n {
            locations[(i, 0)] = rng.random::<f64>();
            responses[(i, 0)] = rng.random::<f64>().powi(2);
        }
        let dataset = Dataset::from_points(locations, responses).unwrap();
        let problem = PosteriorProblem::new(&basis, &dataset, &grid).unwrap();
        let init = draw_prior_weights(24, &mut rng);
        let lp_init = problem.log_posterior(&init).unwrap();
        let report = map_estimate(&problem, &init, &MapOptions::default()).unwrap();
        assert!(report.log_posterior >= lp_init);
        assert!(report.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(report.converged, "grad inf norm {}", report.grad_inf_norm);
    }

    #[test]
    fn deterministic_given_init() {
        let domain = DomainSpec::unit(1, 1).unwrap();
        let spec = KernelSpec::squared_exponential(1.0, vec![0.3, 0.3]).unwrap();
        let basis = build_basis(&spec, &domain, 6, 2).unwrap();
        let grid = build_grid(&domain, &[31]).unwrap();
        let dataset = Dataset::from_points(
            Array2::from_shape_vec((3, 1), vec![0.2, 0.5, 0.9]).unwrap(),
            Array2::from_shape_vec((3, 1), vec![0.3, 0.6, 0.4]).unwrap(),
        )
        .unwrap();
        let problem = PosteriorProblem::new(&basis, &dataset, &grid).unwrap();
        let init = Array1::zeros(12);
        let a = map_estimate(&problem, &init, &MapOptions::default()).unwrap();
        let b = map_estimate(&problem, &init, &MapOptions::default()).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn bad_tolerance_is_rejected() {
        let domain = DomainSpec::unit(1, 1).unwrap();
        let spec = KernelSpec::squared_exponential(1.0, vec![0.4, 0.4]).unwrap();
        let basis = build_basis(&spec, &domain, 4, 1).unwrap();
        let grid = build_grid(&domain, &[11]).unwrap();
        let empty = Dataset::from_points(Array2::zeros((0, 1)), Array2::zeros((0, 1))).unwrap();
        let problem = PosteriorProblem::new(&basis, &empty, &grid).unwrap();
        let options = MapOptions { tol: 0.0, max_iter: 10 };
        assert!(map_estimate(&problem, &Array1::zeros(8), &options).is_err());
    }
}
