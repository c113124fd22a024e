//! Likelihood and posterior evaluation, MAP estimation, pCN sampling,
//! hyperparameter grid search and posterior density prediction.

mod hyper;
mod map;
mod pcn;
mod posterior;
mod predict;

pub use hyper::{
    fractions_to_lengthscales, hyper_grid_search, HyperCandidate, HyperGrid, HyperSearchResult,
};
pub use map::{map_estimate, MapOptions, MapReport};
pub use pcn::{pcn_sample, McmcConfig, PosteriorSamples};
pub use posterior::{log_posterior_and_grad, PosteriorProblem};
pub use predict::{
    predict_density, predict_density_from_draws, DensityPrediction, PredictionBand,
    QuantileSummary, BAND_PROBS,
};
