//! Inference invariants: gradient correctness, pCN prior invariance,
//! acceptance-rate monotonicity in the step size, MAP self-consistency on
//! simulated data and lengthscale recovery by grid search.

mod common;

use common::sample_dataset_from_field;
use ndarray::Array1;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slgp::dataset::Dataset;
use slgp::density::slogt_field;
use slgp::domain::DomainSpec;
use slgp::grid::build_grid;
use slgp::inference::{
    hyper_grid_search, map_estimate, pcn_sample, HyperGrid, MapOptions, McmcConfig,
    PosteriorProblem,
};
use slgp::kernel::KernelSpec;
use slgp::metrics::{divergence, MetricKind};
use slgp::rff::{build_basis, draw_prior_weights};

#[test]
fn gradients_match_finite_differences_across_configurations() {
    let domain = DomainSpec::unit(1, 1).unwrap();
    let grid = build_grid(&domain, &[41]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    for config in 0..8 {
        let p = 3 + (config % 5);
        let variance = 0.5 + rng.random::<f64>();
        let ls = 0.2 + 0.5 * rng.random::<f64>();
        let spec = KernelSpec::squared_exponential(variance, vec![ls, ls]).unwrap();
        let basis = build_basis(&spec, &domain, p, 100 + config as u64).unwrap();
        let n = 20 + 10 * (config % 3);
        let mut locations = ndarray::Array2::zeros((n, 1));
        let mut responses = ndarray::Array2::zeros((n, 1));
        for i in 0..n {
            locations[(i, 0)] = rng.random::<f64>();
            responses[(i, 0)] = rng.random::<f64>();
        }
        let dataset = Dataset::from_points(locations, responses).unwrap();
        let problem = PosteriorProblem::new(&basis, &dataset, &grid).unwrap();
        let eps = draw_prior_weights(2 * p, &mut rng);
        let (_, grad) = problem.log_posterior_and_grad(&eps).unwrap();
        let h = 1e-5;
        for j in 0..2 * p {
            let mut up = eps.clone();
            up[j] += h;
            let mut dn = eps.clone();
            dn[j] -= h;
            let fd = (problem.log_posterior(&up).unwrap()
                - problem.log_posterior(&dn).unwrap())
                / (2.0 * h);
            let denom = grad[j].abs().max(fd.abs()).max(1.0);
            assert!(
                ((grad[j] - fd) / denom).abs() <= 1e-5,
                "config {config} coord {j}: {} vs {fd}",
                grad[j]
            );
        }
    }
}

#[test]
fn pcn_without_data_samples_the_prior() {
    let domain = DomainSpec::unit(1, 1).unwrap();
    let spec = KernelSpec::squared_exponential(1.0, vec![0.4, 0.4]).unwrap();
    let basis = build_basis(&spec, &domain, 4, 1).unwrap();
    let grid = build_grid(&domain, &[21]).unwrap();
    let empty = Dataset::from_points(ndarray::Array2::zeros((0, 1)), ndarray::Array2::zeros((0, 1)))
        .unwrap();
    let problem = PosteriorProblem::new(&basis, &empty, &grid).unwrap();
    let config = McmcConfig { beta: 0.5, n_iter: 20_000, burn_in: 0, thin: 1, seed: 33 };
    let samples = pcn_sample(&problem, &config).unwrap();
    assert_eq!(samples.acceptance_rate, 1.0);
    for j in 0..8 {
        let col = samples.draws.column(j);
        let mean = col.sum() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (col.len() - 1) as f64;
        assert!(mean.abs() <= 0.1, "coordinate {j} mean {mean}");
        assert!((0.85..=1.15).contains(&var), "coordinate {j} variance {var}");
    }
}

#[test]
fn acceptance_rate_decreases_with_step_size() {
    let domain = DomainSpec::unit(1, 1).unwrap();
    let grid = build_grid(&domain, &[51]).unwrap();
    let spec = KernelSpec::squared_exponential(1.0, vec![0.3, 0.3]).unwrap();
    let truth_basis = build_basis(&spec, &domain, 16, 99).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let eps_true = draw_prior_weights(32, &mut rng);
    let dataset = sample_dataset_from_field(&truth_basis, &eps_true, &grid, 150, &mut rng);
    let fit_basis = build_basis(&spec, &domain, 8, 7).unwrap();
    let problem = PosteriorProblem::new(&fit_basis, &dataset, &grid).unwrap();

    let betas = [0.05, 0.1, 0.2, 0.5];
    let mut avg_rates = Vec::new();
    for &beta in &betas {
        let mut acc = 0.0;
        for seed in 0..5u64 {
            let config =
                McmcConfig { beta, n_iter: 1500, burn_in: 0, thin: 1, seed: 500 + seed };
            acc += pcn_sample(&problem, &config).unwrap().acceptance_rate;
        }
        avg_rates.push(acc / 5.0);
    }
    for w in avg_rates.windows(2) {
        assert!(
            w[1] <= w[0],
            "acceptance rates must be nonincreasing in beta: {avg_rates:?}"
        );
    }
}

/// Fit a model on data simulated from a known field; the fitted density must
/// be closer to the truth than the uniform baseline at every test location.
#[test]
fn map_fit_beats_uniform_baseline() {
    let domain = DomainSpec::unit(1, 1).unwrap();
    let grid = build_grid(&domain, &[101]).unwrap();
    let spec = KernelSpec::squared_exponential(1.0, vec![0.3, 0.3]).unwrap();
    let truth_basis = build_basis(&spec, &domain, 50, 4242).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let eps_true = draw_prior_weights(100, &mut rng);
    let dataset = sample_dataset_from_field(&truth_basis, &eps_true, &grid, 5000, &mut rng);

    let fit_basis = build_basis(&spec, &domain, 50, 77).unwrap();
    let problem = PosteriorProblem::new(&fit_basis, &dataset, &grid).unwrap();
    let init = Array1::zeros(100);
    let options = MapOptions { tol: 1e-4, max_iter: 2000 };
    let report = map_estimate(&problem, &init, &options).unwrap();

    let uniform = slgp::density::DensitySlice {
        location: vec![0.0],
        values: Array1::ones(grid.len()),
    };
    for k in 0..10 {
        let x = [0.05 + 0.1 * k as f64];
        let truth = slogt_field(&truth_basis, &eps_true, &x, &grid).unwrap();
        let fitted = slogt_field(&fit_basis, &report.weights, &x, &grid).unwrap();
        let d_fit = divergence(MetricKind::Hellinger, &fitted, &truth, &grid).unwrap();
        let d_unif = divergence(MetricKind::Hellinger, &uniform, &truth, &grid).unwrap();
        assert!(
            d_fit < d_unif,
            "location {x:?}: fitted {d_fit} not better than uniform {d_unif}"
        );
    }
}

/// Grid search recovers the simulation lengthscale for most seeds.
#[test]
fn grid_search_recovers_the_generating_lengthscale() {
    let domain = DomainSpec::unit(1, 1).unwrap();
    let grid = build_grid(&domain, &[51]).unwrap();
    let template = KernelSpec::squared_exponential(1.0, vec![1.0, 1.0]).unwrap();
    let truth_spec = KernelSpec::squared_exponential(1.0, vec![0.2, 0.2]).unwrap();
    let hyper = HyperGrid {
        fractions: vec![vec![0.05, 0.05], vec![0.2, 0.2], vec![0.8, 0.8]],
    };
    let options = MapOptions { tol: 1e-4, max_iter: 1500 };
    let mut hits = 0;
    for seed in 0..10u64 {
        let truth_basis = build_basis(&truth_spec, &domain, 32, 9000 + seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(70 + seed);
        let eps_true = draw_prior_weights(64, &mut rng);
        let dataset = sample_dataset_from_field(&truth_basis, &eps_true, &grid, 1500, &mut rng);
        let result = hyper_grid_search(
            &template, &hyper, &dataset, &domain, &grid, 24, 300 + seed, &options,
        )
        .unwrap();
        if result.best == 1 {
            hits += 1;
        }
    }
    assert!(hits >= 8, "generating lengthscale recovered in only {hits}/10 seeds");
}
