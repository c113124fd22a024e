//! Subcommand implementations: simulate, fit-map, fit-mcmc, predict, rates
//! and metrics. Every artifact carries the reproducibility header and is
//! written atomically.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use slgp::dataset::{holdout_split, load_dataset_csv, Dataset, RescaleRecord};
use slgp::density::DensitySlice;
use slgp::domain::DomainSpec;
use slgp::error::{Result, SlgpError};
use slgp::grid::{build_grid, QuadratureGrid};
use slgp::inference::{
    hyper_grid_search, map_estimate, pcn_sample, predict_density_from_draws, HyperSearchResult,
    McmcConfig, PosteriorProblem,
};
use slgp::io::{
    artifact_comments, read_density_csv, write_chain_csv, write_csv_atomic,
    write_density_draws_csv, write_density_with_bands_csv, FORMAT_VERSION,
};
use slgp::metrics::{check_hellinger_bound, divergence, MetricKind};
use slgp::rates::{fit_rate_slope, simulate_mean_power_multi, RateExperiment};
use slgp::rff::{build_basis, draw_prior_weights, ResponsePhases, RffBasis};
use slgp::seeding::{derive_seed, stream_rng, STREAM_BASIS, STREAM_CHAIN, STREAM_SIMULATE};

use crate::artifacts::{save_json, FitArtifact, MapSummary, McmcSummary, StationInfo};
use crate::config::RunConfig;

fn ensure_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn config_json(config: &RunConfig) -> String {
    serde_json::to_string(config).unwrap_or_else(|_| "{}".into())
}

fn sanitize_label(key: &str) -> String {
    key.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn simulate(config: &RunConfig, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let domain = config.domain_required()?;
    if config.locations.is_empty() {
        return Err(SlgpError::Config("simulate needs at least one entry in 'locations'".into()));
    }
    for x in &config.locations {
        domain.check_location(x)?;
    }
    let basis = build_basis(&config.kernel, domain, config.p, derive_seed(config.seed, STREAM_BASIS))?;
    let grid = build_grid(domain, &config.report_grid())?;
    let phases = ResponsePhases::new(&basis, grid.nodes())?;
    let mut rng = stream_rng(config.seed, STREAM_SIMULATE);

    let mut slices: Vec<(usize, DensitySlice)> = Vec::new();
    for draw in 0..config.n_draws {
        let eps = draw_prior_weights(basis.feature_dim(), &mut rng);
        for x in &config.locations {
            let z = phases.z_slice(&basis, &eps, x)?;
            slices.push((draw, slgp::density::slogt_values(&z, &grid, x)?));
        }
    }
    let comments = artifact_comments(config.seed, &config_json(config));
    let refs: Vec<(usize, &DensitySlice)> = slices.iter().map(|(d, s)| (*d, s)).collect();
    write_density_draws_csv(out.join("draws.csv"), &comments, &refs, &grid)?;

    #[derive(serde::Serialize)]
    struct SimulateHeader<'a> {
        format_version: u32,
        seed: u64,
        config: &'a RunConfig,
        basis: &'a RffBasis,
    }
    save_json(
        out.join("simulate.json"),
        &SimulateHeader { format_version: FORMAT_VERSION, seed: config.seed, config, basis: &basis },
    )?;
    eprintln!("simulate: wrote {} draws x {} locations", config.n_draws, config.locations.len());
    Ok(())
}

struct FitInputs {
    domain: DomainSpec,
    rescale: RescaleRecord,
    train: Dataset,
    n_test: usize,
    rejected: usize,
    stations: Vec<StationInfo>,
    grid: QuadratureGrid,
    hyper: Option<HyperSearchResult>,
    basis: RffBasis,
}

fn prepare_fit(config: &RunConfig) -> Result<FitInputs> {
    let data_cfg = config.data_required()?;
    let loaded = load_dataset_csv(&data_cfg.path, &data_cfg.schema, data_cfg.response_margin)?;
    for (line, message) in &loaded.rejected {
        eprintln!("rejected row at line {line}: {message}");
    }
    let (train, test) = holdout_split(&loaded.dataset, &config.holdout)?;
    if train.is_empty() {
        return Err(SlgpError::Data { line: 0, message: "training set is empty after holdout".into() });
    }
    let domain = loaded.domain;
    let grid = build_grid(&domain, &config.grid_m)?;

    let basis_seed = derive_seed(config.seed, STREAM_BASIS);
    let (spec, hyper) = match &config.hyper {
        Some(h) => {
            let result = hyper_grid_search(
                &config.kernel,
                h,
                &train,
                &domain,
                &grid,
                config.p,
                basis_seed,
                &config.map,
            )?;
            let best = result.best_candidate();
            eprintln!(
                "grid search: best fractions {:?} (neg log posterior {:.3})",
                best.fractions,
                best.neg_log_posterior.unwrap_or(f64::NAN)
            );
            (config.kernel.with_lengthscales(best.lengthscales.clone())?, Some(result))
        }
        None => {
            if config.kernel.dim() != domain.dim() {
                return Err(SlgpError::Config(format!(
                    "kernel has {} lengthscales but the data domain has {} dimensions",
                    config.kernel.dim(),
                    domain.dim()
                )));
            }
            (config.kernel.clone(), None)
        }
    };
    let basis = build_basis(&spec, &domain, config.p, basis_seed)?;

    let stations = loaded
        .dataset
        .stations()
        .into_iter()
        .map(|(key, location)| {
            let location_raw = location
                .iter()
                .zip(&loaded.rescale.location)
                .map(|(v, m)| m.to_raw(*v))
                .collect();
            let held_out = config.holdout.contains(&key);
            StationInfo { key, location, location_raw, held_out }
        })
        .collect();

    Ok(FitInputs {
        domain,
        rescale: loaded.rescale,
        train,
        n_test: test.len(),
        rejected: loaded.rejected.len(),
        stations,
        grid,
        hyper,
        basis,
    })
}

fn base_artifact(config: &RunConfig, inputs: &FitInputs, kind: &str) -> FitArtifact {
    FitArtifact {
        format_version: FORMAT_VERSION,
        kind: kind.into(),
        seed: config.seed,
        config: config.clone(),
        domain: inputs.domain.clone(),
        rescale: Some(inputs.rescale.clone()),
        stations: inputs.stations.clone(),
        holdout: config.holdout.clone(),
        basis: inputs.basis.clone(),
        hyper: inputs.hyper.clone(),
        map: None,
        mcmc: None,
        n_train: inputs.train.len(),
        n_test: inputs.n_test,
        rejected_rows: inputs.rejected,
    }
}

pub fn fit_map(config: &RunConfig, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let inputs = prepare_fit(config)?;
    let problem = PosteriorProblem::new(&inputs.basis, &inputs.train, &inputs.grid)?;
    let init = ndarray::Array1::zeros(inputs.basis.feature_dim());
    let report = map_estimate(&problem, &init, &config.map)?;
    eprintln!(
        "fit-map: log posterior {:.3} after {} iterations (converged: {})",
        report.log_posterior, report.iterations, report.converged
    );

    let comments = artifact_comments(config.seed, &config_json(config));
    write_csv_atomic(
        out.join("map_trace.csv"),
        &comments,
        &["iteration".into(), "log_posterior".into()],
        report.trace.iter().enumerate().map(|(i, lp)| vec![i.to_string(), fmt(*lp)]),
    )?;

    let mut artifact = base_artifact(config, &inputs, "map");
    artifact.map = Some(MapSummary {
        weights: report.weights.to_vec(),
        log_posterior: report.log_posterior,
        grad_inf_norm: report.grad_inf_norm,
        iterations: report.iterations,
        converged: report.converged,
    });
    artifact.save(out.join("fit.json"))?;
    Ok(())
}

pub fn fit_mcmc(config: &RunConfig, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let inputs = prepare_fit(config)?;
    let problem = PosteriorProblem::new(&inputs.basis, &inputs.train, &inputs.grid)?;
    let chain_seed = derive_seed(config.seed, STREAM_CHAIN);
    let mcmc_config = McmcConfig {
        beta: config.mcmc.beta,
        n_iter: config.mcmc.n_iter,
        burn_in: config.mcmc.burn_in,
        thin: config.mcmc.thin,
        seed: chain_seed,
    };
    let samples = pcn_sample(&problem, &mcmc_config)?;
    eprintln!(
        "fit-mcmc: {} kept draws, acceptance rate {:.3}",
        samples.draws.nrows(),
        samples.acceptance_rate
    );

    let comments = artifact_comments(config.seed, &config_json(config));
    write_chain_csv(out.join("chain.csv"), &comments, &samples.draws)?;
    write_csv_atomic(
        out.join("chain_trace.csv"),
        &comments,
        &["iteration".into(), "log_posterior".into()],
        samples
            .log_posterior_trace
            .iter()
            .enumerate()
            .map(|(i, lp)| vec![(i + 1).to_string(), fmt(*lp)]),
    )?;

    let mut artifact = base_artifact(config, &inputs, "mcmc");
    artifact.mcmc = Some(McmcSummary {
        beta: mcmc_config.beta,
        n_iter: mcmc_config.n_iter,
        burn_in: mcmc_config.burn_in,
        thin: mcmc_config.thin,
        chain_seed,
        acceptance_rate: samples.acceptance_rate,
        accepted: samples.accepted,
        kept: samples.draws.nrows(),
        chain_file: "chain.csv".into(),
    });
    artifact.save(out.join("fit.json"))?;

    #[derive(serde::Serialize)]
    struct Diagnostics {
        format_version: u32,
        acceptance_rate: f64,
        accepted: usize,
        n_iter: usize,
        kept: usize,
        log_posterior_first: f64,
        log_posterior_last: f64,
    }
    save_json(
        out.join("diagnostics.json"),
        &Diagnostics {
            format_version: FORMAT_VERSION,
            acceptance_rate: samples.acceptance_rate,
            accepted: samples.accepted,
            n_iter: mcmc_config.n_iter,
            kept: samples.draws.nrows(),
            log_posterior_first: *samples.log_posterior_trace.first().unwrap_or(&f64::NAN),
            log_posterior_last: *samples.log_posterior_trace.last().unwrap_or(&f64::NAN),
        },
    )?;
    Ok(())
}

pub struct PredictArgs {
    pub fit: PathBuf,
    pub out: PathBuf,
    pub stations: Vec<String>,
    pub locations: Vec<Vec<f64>>,
    pub probs: Option<Vec<f64>>,
    pub grid_m: Option<usize>,
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let artifact = FitArtifact::load(&args.fit)?;
    let fit_dir = args.fit.parent().map(Path::to_path_buf).unwrap_or_default();

    let draws: Array2<f64> = match artifact.kind.as_str() {
        "map" => {
            let map = artifact.map.as_ref().ok_or_else(|| SlgpError::Data {
                line: 0,
                message: "map artifact without weights".into(),
            })?;
            Array2::from_shape_vec((1, map.weights.len()), map.weights.clone())
                .map_err(|e| SlgpError::Data { line: 0, message: e.to_string() })?
        }
        "mcmc" => {
            let mcmc = artifact.mcmc.as_ref().ok_or_else(|| SlgpError::Data {
                line: 0,
                message: "mcmc artifact without chain metadata".into(),
            })?;
            slgp::io::read_chain_csv(fit_dir.join(&mcmc.chain_file))?
        }
        other => {
            return Err(SlgpError::Data {
                line: 0,
                message: format!("unknown fit kind '{other}'"),
            })
        }
    };

    let mut targets: Vec<(String, Vec<f64>)> = Vec::new();
    let station_keys: &[String] =
        if args.stations.is_empty() { &artifact.config.stations } else { &args.stations };
    for key in station_keys {
        let info = artifact.station(key)?;
        targets.push((sanitize_label(key), info.location.clone()));
    }
    let locations: &[Vec<f64>] =
        if args.locations.is_empty() { &artifact.config.locations } else { &args.locations };
    for (i, x) in locations.iter().enumerate() {
        targets.push((format!("loc{i}"), x.clone()));
    }
    if targets.is_empty() {
        return Err(SlgpError::Config(
            "predict needs stations or locations (flags or config)".into(),
        ));
    }

    let probs = args.probs.clone().unwrap_or_else(|| artifact.config.probs.clone());
    let grid_m = match args.grid_m {
        Some(m) => vec![m; artifact.domain.d_t()],
        None => artifact.config.report_grid(),
    };
    let grid = build_grid(&artifact.domain, &grid_m)?;
    let comments = artifact_comments(artifact.seed, &config_json(&artifact.config));
    let response_map = artifact.rescale.as_ref().map(|r| r.response);

    #[derive(serde::Serialize)]
    struct QuantileOut {
        prob: f64,
        mean: f64,
        lower: f64,
        upper: f64,
        mean_raw: Option<f64>,
        lower_raw: Option<f64>,
        upper_raw: Option<f64>,
    }
    #[derive(serde::Serialize)]
    struct TargetOut {
        label: String,
        location: Vec<f64>,
        quantiles: Vec<QuantileOut>,
        mean_file: String,
        draws_file: String,
    }
    let mut report: Vec<TargetOut> = Vec::new();
    let mut quantile_rows: Vec<Vec<String>> = Vec::new();

    for (label, x) in &targets {
        let pred = predict_density_from_draws(&artifact.basis, draws.view(), x, &grid, &probs)?;
        let mean_file = format!("pred_{label}_mean.csv");
        let draws_file = format!("pred_{label}_draws.csv");
        write_density_with_bands_csv(
            args.out.join(&mean_file),
            &comments,
            &pred.mean,
            &pred.bands[0].values,
            &pred.bands[1].values,
            &grid,
        )?;
        let draw_refs: Vec<(usize, &DensitySlice)> =
            pred.draws.iter().enumerate().collect();
        write_density_draws_csv(args.out.join(&draws_file), &comments, &draw_refs, &grid)?;

        let mut quantiles = Vec::new();
        for q in &pred.quantiles {
            let raw = response_map.map(|m| (m.to_raw(q.mean), m.to_raw(q.lower), m.to_raw(q.upper)));
            quantiles.push(QuantileOut {
                prob: q.prob,
                mean: q.mean,
                lower: q.lower,
                upper: q.upper,
                mean_raw: raw.map(|r| r.0),
                lower_raw: raw.map(|r| r.1),
                upper_raw: raw.map(|r| r.2),
            });
            let mut row = vec![label.clone()];
            row.extend(x.iter().map(|v| fmt(*v)));
            row.push(fmt(q.prob));
            row.push(fmt(q.mean));
            row.push(fmt(q.lower));
            row.push(fmt(q.upper));
            quantile_rows.push(row);
        }
        report.push(TargetOut {
            label: label.clone(),
            location: x.clone(),
            quantiles,
            mean_file,
            draws_file,
        });
    }

    let d_d = artifact.domain.d_d();
    let mut header: Vec<String> = vec!["label".into()];
    header.extend((0..d_d).map(|k| format!("x{}", k + 1)));
    header.extend(["prob".into(), "mean".into(), "lower".into(), "upper".into()]);
    write_csv_atomic(args.out.join("quantiles.csv"), &comments, &header, quantile_rows.into_iter())?;

    #[derive(serde::Serialize)]
    struct PredictReport<'a> {
        format_version: u32,
        seed: u64,
        fit_kind: &'a str,
        n_draws: usize,
        targets: Vec<TargetOut>,
    }
    save_json(
        args.out.join("predictions.json"),
        &PredictReport {
            format_version: FORMAT_VERSION,
            seed: artifact.seed,
            fit_kind: &artifact.kind,
            n_draws: draws.nrows(),
            targets: report,
        },
    )?;
    eprintln!("predict: wrote {} targets from {} draws", targets.len(), draws.nrows());
    Ok(())
}

pub fn rates(config: &RunConfig, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let domain = config.domain_required()?;
    let rates_cfg = config
        .rates
        .as_ref()
        .ok_or_else(|| SlgpError::Config("rates needs a 'rates' block in the config".into()))?;
    let grid = build_grid(domain, &config.grid_m)?;
    let exp = RateExperiment {
        kernel: config.kernel.clone(),
        domain: domain.clone(),
        metric: *rates_cfg.metrics.first().unwrap_or(&MetricKind::Hellinger),
        gamma: rates_cfg.gamma,
        offsets: rates_cfg.offsets.clone(),
        n_reps: rates_cfg.n_reps,
        p: config.p,
        seed: config.seed,
    };
    let results = simulate_mean_power_multi(&exp, &rates_cfg.metrics, &grid)?;

    let comments = artifact_comments(config.seed, &config_json(config));
    let mut rows = Vec::new();
    for result in &results {
        let name = serde_json::to_string(&result.metric).unwrap_or_default().replace('"', "");
        for k in 0..result.offsets.len() {
            rows.push(vec![
                name.clone(),
                fmt(result.gamma),
                fmt(result.offsets[k]),
                fmt(result.estimates[k]),
                fmt(result.std_errors[k]),
            ]);
        }
    }
    write_csv_atomic(
        out.join("rates.csv"),
        &comments,
        &["metric".into(), "gamma".into(), "offset".into(), "estimate".into(), "stderr".into()],
        rows.into_iter(),
    )?;

    #[derive(serde::Serialize)]
    struct SlopeOut {
        metric: MetricKind,
        gamma: f64,
        slope: Option<f64>,
        slope_error: Option<String>,
        theoretical_exponent: f64,
        fit_range: (f64, f64),
    }
    #[derive(serde::Serialize)]
    struct RatesReport<'a> {
        format_version: u32,
        seed: u64,
        config: &'a RunConfig,
        slopes: Vec<SlopeOut>,
    }
    let slopes = results
        .iter()
        .map(|result| {
            let fitted = fit_rate_slope(result, rates_cfg.fit_range);
            SlopeOut {
                metric: result.metric,
                gamma: result.gamma,
                slope: fitted.as_ref().ok().copied(),
                slope_error: fitted.err().map(|e| e.to_string()),
                theoretical_exponent: result.theoretical_exponent,
                fit_range: rates_cfg.fit_range,
            }
        })
        .collect();
    save_json(
        out.join("rates.json"),
        &RatesReport { format_version: FORMAT_VERSION, seed: config.seed, config, slopes },
    )?;
    eprintln!("rates: wrote {} metric curves", results.len());
    Ok(())
}

pub fn metrics(f_path: &Path, g_path: &Path, out: &Path) -> Result<()> {
    let df = read_density_csv(f_path)?;
    let dg = read_density_csv(g_path)?;
    if df.grid.node_counts() != dg.grid.node_counts()
        || (df.grid.volume() - dg.grid.volume()).abs() > 1e-9 * df.grid.volume().abs().max(1.0)
    {
        return Err(SlgpError::Data {
            line: 0,
            message: "the two density files use different response grids".into(),
        });
    }
    let as_data = |e: SlgpError| match e {
        SlgpError::InvalidParameter(msg) => SlgpError::Data { line: 0, message: msg },
        other => other,
    };
    let grid = &df.grid;
    let hellinger =
        divergence(MetricKind::Hellinger, &df.slice, &dg.slice, grid).map_err(as_data)?;
    let kl_fg = divergence(MetricKind::Kl, &df.slice, &dg.slice, grid).map_err(as_data)?;
    let kl_gf = divergence(MetricKind::Kl, &dg.slice, &df.slice, grid).map_err(as_data)?;
    let tv = divergence(MetricKind::Tv, &df.slice, &dg.slice, grid).map_err(as_data)?;
    let bound = check_hellinger_bound(&df.slice, &dg.slice, grid).map_err(as_data)?;

    #[derive(serde::Serialize)]
    struct MetricsReport {
        format_version: u32,
        hellinger: f64,
        kl_fg: f64,
        kl_gf: f64,
        tv: f64,
        suplog: f64,
        hellinger_bound_ok: bool,
    }
    let report = MetricsReport {
        format_version: FORMAT_VERSION,
        hellinger,
        kl_fg,
        kl_gf,
        tv,
        suplog: bound.sup_log,
        hellinger_bound_ok: bound.bound_satisfied,
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    save_json(out, &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
