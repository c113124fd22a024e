//! Shared helpers for integration tests.

use ndarray::Array2;

#[allow(dead_code)]
/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
/// Test-only: dimensions stay tiny, so plain sweeps are plenty.
pub fn symmetric_min_eigenvalue(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = a.clone();
    for _ in 0..200 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min)
}

#[allow(dead_code)]
pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: got {actual}, expected {expected} (tol {tol})"
    );
}

use ndarray::Array1;
use rand_chacha::ChaCha8Rng;
use slgp::dataset::Dataset;
use slgp::density::{sample_response, slogt_field_with_phases};
use slgp::grid::QuadratureGrid;
use slgp::rff::{ResponsePhases, RffBasis, WeightVector};

/// Draw `n` records from the density field of a known weight vector:
/// locations uniform on the (1-d) spatial box, responses by inverse-CDF
/// sampling of the slice at each location.
#[allow(dead_code)]
pub fn sample_dataset_from_field(
    basis: &RffBasis,
    eps: &WeightVector,
    grid: &QuadratureGrid,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Dataset {
    use rand::Rng;
    let phases = ResponsePhases::new(basis, grid.nodes()).unwrap();
    let mut locations = ndarray::Array2::zeros((n, 1));
    let mut responses = ndarray::Array2::zeros((n, 1));
    for i in 0..n {
        let x = [rng.random::<f64>()];
        let slice = slogt_field_with_phases(basis, &phases, eps, &x, grid).unwrap();
        locations[(i, 0)] = x[0];
        responses[(i, 0)] = sample_response(&slice, grid, rng).unwrap();
    }
    Dataset::from_points(locations, responses).unwrap()
}

/// Trapezoid weights on [0, 1] with `m` nodes, for spatial averaging in
/// integrated-distance oracles.
#[allow(dead_code)]
pub fn unit_trapezoid_weights(m: usize) -> Vec<f64> {
    let h = 1.0 / (m - 1) as f64;
    (0..m).map(|i| if i == 0 || i == m - 1 { 0.5 * h } else { h }).collect()
}

#[allow(dead_code)]
pub fn linspace(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Mean of a slice of f64.
#[allow(dead_code)]
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[allow(dead_code)]
pub fn weights_array(v: Vec<f64>) -> Array1<f64> {
    Array1::from(v)
}
