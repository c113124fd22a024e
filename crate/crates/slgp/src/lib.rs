//! Non-parametric estimation of probability-density fields with spatial
//! logistic Gaussian processes.
//!
//! A centred GP over the product of a spatial box and a response box is made
//! finite-rank through random Fourier features, exponentiated and normalized
//! over the response at every location, which yields a field of probability
//! densities. The crate covers the full workflow:
//!
//! - [`kernel`]: stationary ARD kernels, their canonical semi-distance and
//!   increment kernel, and spectral frequency sampling;
//! - [`rff`]: Fourier feature bases and finite-rank GP evaluation;
//! - [`grid`] / [`density`]: trapezoid quadrature, the logistic density
//!   transform and per-slice summaries (moments, quantiles);
//! - [`metrics`]: Hellinger / KL / TV / sup-log dissimilarities and the
//!   integrated Hellinger field distance;
//! - [`inference`]: posterior evaluation with analytic gradients, MAP
//!   ascent, preconditioned Crank-Nicolson sampling, lengthscale grid search
//!   and posterior density prediction;
//! - [`rates`]: Monte Carlo estimation of spatial mean-power continuity
//!   rates and log-log slope fitting;
//! - [`dataset`] / [`io`]: CSV ingestion with affine rescaling, holdout
//!   splits and reproducible artifact files.

pub mod dataset;
pub mod density;
pub mod domain;
pub mod error;
pub mod grid;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod rates;
pub mod rff;
pub mod seeding;

pub use error::{Result, SlgpError};
