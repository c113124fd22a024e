//! Random-feature basis invariants: the covariance identity between the
//! finite-rank GP and the approximate kernel, positive semidefiniteness and
//! Monte Carlo kernel fidelity.

mod common;

use common::symmetric_min_eigenvalue;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slgp::domain::DomainSpec;
use slgp::kernel::{KernelSpec, MaternSmoothness};
use slgp::rff::{build_basis, draw_prior_weights};

#[test]
fn prior_moments_match_the_approximate_kernel() {
    let domain = DomainSpec::unit(1, 1).unwrap();
    let spec = KernelSpec::matern(MaternSmoothness::ThreeHalves, 1.5, vec![0.5, 0.5]).unwrap();
    let basis = build_basis(&spec, &domain, 32, 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs: Vec<([f64; 2], [f64; 2])> = (0..10)
        .map(|_| {
            (
                [rng.random::<f64>(), rng.random::<f64>()],
                [rng.random::<f64>(), rng.random::<f64>()],
            )
        })
        .collect();
    let n = 100_000usize;
    let mut acc = vec![0.0f64; pairs.len()];
    let mut var_acc = 0.0f64;
    let y_var = [0.3, 0.7];
    for _ in 0..n {
        let eps = draw_prior_weights(basis.feature_dim(), &mut rng);
        for (k, (y, y2)) in pairs.iter().enumerate() {
            acc[k] += basis.gp_eval(&eps, y).unwrap() * basis.gp_eval(&eps, y2).unwrap();
        }
        let v = basis.gp_eval(&eps, &y_var).unwrap();
        var_acc += v * v;
    }
    // cross-covariance: CLT tolerance 5 * sqrt(2) sigma^2 / sqrt(n)
    let tol = 5.0 * std::f64::consts::SQRT_2 * spec.variance() / (n as f64).sqrt();
    for (k, (y, y2)) in pairs.iter().enumerate() {
        let expected = basis.approx_kernel(y, y2).unwrap();
        let got = acc[k] / n as f64;
        assert!((got - expected).abs() <= tol, "pair {k}: {got} vs {expected}");
    }
    // pointwise variance equals sigma^2 within 2%
    let var = var_acc / n as f64;
    assert!((var / spec.variance() - 1.0).abs() <= 0.02, "prior variance {var}");
}

#[test]
fn approximate_kernel_gram_is_psd() {
    let domain = DomainSpec::unit(1, 1).unwrap();
    let spec = KernelSpec::squared_exponential(2.0, vec![0.3, 0.6]).unwrap();
    let basis = build_basis(&spec, &domain, 64, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points: Vec<[f64; 2]> =
        (0..20).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let mut gram = Array2::zeros((20, 20));
    for i in 0..20 {
        for j in 0..20 {
            gram[(i, j)] = basis.approx_kernel(&points[i], &points[j]).unwrap();
        }
    }
    let min_eig = symmetric_min_eigenvalue(&gram);
    assert!(min_eig >= -1e-10, "min eigenvalue {min_eig}");
}

#[test]
fn batched_features_equal_pointwise_features_exactly() {
    let domain = DomainSpec::unit(2, 1).unwrap();
    let spec = KernelSpec::matern(MaternSmoothness::FiveHalves, 1.0, vec![0.4, 0.8, 0.2]).unwrap();
    let basis = build_basis(&spec, &domain, 24, 17).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut points = Array2::zeros((40, 3));
    for mut row in points.rows_mut() {
        for v in row.iter_mut() {
            *v = rng.random::<f64>();
        }
    }
    let batch = basis.feature_matrix(points.view()).unwrap();
    for (i, pt) in points.rows().into_iter().enumerate() {
        let single = basis.features(pt.to_slice().unwrap()).unwrap();
        for j in 0..basis.feature_dim() {
            assert_eq!(batch[(i, j)], single[j], "row {i} column {j}");
        }
    }
}

/// Monte Carlo fidelity of the feature-map kernel against the closed form:
/// `max |k_rff - k| <= 5 sigma^2 / sqrt(p)` over random pairs, three seeds.
#[test]
fn kernel_approximation_error_within_clt_envelope() {
    let domain = DomainSpec::unit(1, 1).unwrap();
    let spec = KernelSpec::matern(MaternSmoothness::FiveHalves, 1.0, vec![0.5, 0.5]).unwrap();
    let p = 2048usize;
    let tol = 5.0 * spec.variance() / (p as f64).sqrt();
    for seed in [1u64, 2, 3] {
        let basis = build_basis(&spec, &domain, p, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let y = [rng.random::<f64>(), rng.random::<f64>()];
            let y2 = [rng.random::<f64>(), rng.random::<f64>()];
            let approx = basis.approx_kernel(&y, &y2).unwrap();
            let exact = spec.eval(&y, &y2).unwrap();
            worst = worst.max((approx - exact).abs());
        }
        assert!(worst <= tol, "seed {seed}: max error {worst} > {tol}");
    }
}

#[test]
fn linear_combinations_evaluate_linearly_on_grids() {
    let domain = DomainSpec::unit(1, 1).unwrap();
    let spec = KernelSpec::squared_exponential(1.0, vec![0.5, 0.5]).unwrap();
    let basis = build_basis(&spec, &domain, 16, 23).unwrap();
    let grid = slgp::grid::build_grid(&domain, &[33]).unwrap();
    let phases = slgp::rff::ResponsePhases::new(&basis, grid.nodes()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let e1 = draw_prior_weights(32, &mut rng);
    let e2 = draw_prior_weights(32, &mut rng);
    let combo: Array1<f64> = 1.3 * &e1 - 0.7 * &e2;
    let x = [0.42];
    let z1 = phases.z_slice(&basis, &e1, &x).unwrap();
    let z2 = phases.z_slice(&basis, &e2, &x).unwrap();
    let zc = phases.z_slice(&basis, &combo, &x).unwrap();
    for g in 0..grid.len() {
        assert!((zc[g] - (1.3 * z1[g] - 0.7 * z2[g])).abs() <= 1e-12);
    }
}
