//! CLI behavior: determinism of artifacts, the MAP fit/predict path, the
//! metrics command and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn slgp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slgp"))
}

fn write_small_csv(path: &Path) {
    let mut rows = String::from("Station,Date,Daily average temperature,Altitude,Longitude,Latitude\n");
    for s in 0..5 {
        let name = format!("A{s}");
        let alt = 300.0 + 500.0 * s as f64;
        let base = 12.0 - alt / 150.0;
        for d in 0..30 {
            let temp = base + 6.0 * ((d as f64) * 0.7 + s as f64).sin();
            rows.push_str(&format!(
                "{name},2019-01-{:02},{temp:.2},{alt:.0},{:.3},{:.3}\n",
                d + 1,
                7.0 + 0.3 * s as f64,
                46.0 + 0.2 * s as f64,
            ));
        }
    }
    fs::write(path, rows).unwrap();
}

fn write_small_config(path: &Path, data_path: &Path) {
    let config = serde_json::json!({
        "seed": 7,
        "kernel": {
            "family": "squared_exponential",
            "variance": 1.0,
            "lengthscales": [0.4, 0.4, 0.3, 0.1]
        },
        "p": 16,
        "grid_m": [41],
        "report_grid_m": [81],
        "mcmc": { "beta": 0.2, "n_iter": 300, "burn_in": 100, "thin": 4 },
        "map": { "tol": 1e-5, "max_iter": 1000 },
        "data": {
            "path": data_path.to_str().unwrap(),
            "schema": {
                "location_columns": ["Latitude", "Longitude", "Altitude"],
                "response_column": "Daily average temperature",
                "passthrough_columns": ["Station", "Date"]
            },
            "response_margin": 0.1
        },
        "holdout": ["A4"],
        "stations": ["A4"],
        "probs": [0.25, 0.5, 0.75]
    });
    fs::write(path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
}

#[test]
fn simulate_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    let config = serde_json::json!({
        "seed": 11,
        "kernel": { "family": "matern", "nu": 1.5, "variance": 1.0, "lengthscales": [0.5, 0.3] },
        "domain": { "bounds_d": [[0.0, 1.0]], "bounds_t": [[0.0, 1.0]] },
        "p": 32,
        "grid_m": [51],
        "report_grid_m": [51],
        "locations": [[0.2], [0.8]],
        "n_draws": 5
    });
    fs::write(&config_path, serde_json::to_string(&config).unwrap()).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = slgp()
            .args(["simulate", "--config", config_path.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(out_a.join("draws.csv")).unwrap();
    let b = fs::read(out_b.join("draws.csv")).unwrap();
    assert_eq!(a, b, "same seed must reproduce draws.csv byte for byte");

    // reproducibility header embedded in the artifact
    let text = String::from_utf8_lossy(&a);
    assert!(text.starts_with("# slgp format_version=1\n"));
    assert!(text.contains("# seed=11"));
    assert!(text.contains("# config={"));

    // a different seed changes the output
    let out_c = dir.path().join("c");
    let status = slgp()
        .args([
            "simulate",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out_c.to_str().unwrap(),
            "--seed",
            "12",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let c = fs::read(out_c.join("draws.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn fit_map_then_predict_at_held_out_station() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("data.csv");
    let config_path = dir.path().join("config.json");
    write_small_csv(&data_path);
    write_small_config(&config_path, &data_path);

    let fit_dir = dir.path().join("fit");
    let status = slgp()
        .args(["fit-map", "--config", config_path.to_str().unwrap(), "--out", fit_dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(fit_dir.join("fit.json").exists());
    assert!(fit_dir.join("map_trace.csv").exists());

    let fit_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fit_dir.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit_json["kind"], "map");
    assert_eq!(fit_json["n_train"], 120);
    assert_eq!(fit_json["n_test"], 30);
    assert!(fit_json["map"]["converged"].as_bool().unwrap());

    let pred_dir = dir.path().join("pred");
    let status = slgp()
        .args([
            "predict",
            "--fit",
            fit_dir.join("fit.json").to_str().unwrap(),
            "--out",
            pred_dir.to_str().unwrap(),
            "--probs",
            "0.1,0.5,0.9",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let predictions: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(pred_dir.join("predictions.json")).unwrap())
            .unwrap();
    assert_eq!(predictions["n_draws"], 1);
    let quantiles = predictions["targets"][0]["quantiles"].as_array().unwrap();
    let q: Vec<f64> = quantiles.iter().map(|v| v["mean"].as_f64().unwrap()).collect();
    assert!(q[0] <= q[1] && q[1] <= q[2]);
}

#[test]
fn fit_mcmc_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("data.csv");
    let config_path = dir.path().join("config.json");
    write_small_csv(&data_path);
    write_small_config(&config_path, &data_path);
    let fit_dir = dir.path().join("fit");
    let status = slgp()
        .args([
            "fit-mcmc",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            fit_dir.to_str().unwrap(),
            "--iters",
            "200",
            "--burnin",
            "50",
            "--thin",
            "3",
            "--beta",
            "0.15",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let fit_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fit_dir.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit_json["mcmc"]["n_iter"], 200);
    assert_eq!(fit_json["mcmc"]["kept"], 50);
    assert_eq!(fit_json["mcmc"]["beta"], 0.15);
    // chain file row count matches kept draws
    let chain_rows = fs::read_to_string(fit_dir.join("chain.csv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count();
    assert_eq!(chain_rows, 1 + 50);
}

#[test]
fn metrics_command_reports_divergences() {
    let dir = tempfile::tempdir().unwrap();
    // two density files on the same regular grid
    let m = 101usize;
    let mut f_csv = String::from("x1,t1,density\n");
    let mut g_csv = String::from("x1,t1,density\n");
    let e = std::f64::consts::E;
    for k in 0..m {
        let t = k as f64 / (m - 1) as f64;
        f_csv.push_str(&format!("0,{t},1\n"));
        g_csv.push_str(&format!("0,{t},{}\n", t.exp() / (e - 1.0)));
    }
    let f_path = dir.path().join("f.csv");
    let g_path = dir.path().join("g.csv");
    fs::write(&f_path, f_csv).unwrap();
    fs::write(&g_path, g_csv).unwrap();
    let out = dir.path().join("report.json");
    let output = slgp()
        .args([
            "metrics",
            "--f",
            f_path.to_str().unwrap(),
            "--g",
            g_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    // uniform vs e^t/(e-1): KL(f||g) = ln(e-1) - 1/2, Hellinger ~ 0.1011
    assert!((report["kl_fg"].as_f64().unwrap() - 0.041324854612918).abs() < 1e-4);
    assert!((report["hellinger"].as_f64().unwrap() - 0.10106852496963516).abs() < 1e-4);
    assert!((report["suplog"].as_f64().unwrap() - 0.541324854612918).abs() < 1e-4);
    assert!(report["hellinger_bound_ok"].as_bool().unwrap());
    assert!(report["tv"].as_f64().unwrap() > 0.0);
    assert_ne!(report["kl_fg"], report["kl_gf"]);
}

#[test]
fn exit_codes_cover_config_data_and_grid_failures() {
    let dir = tempfile::tempdir().unwrap();

    // missing config file: config error (2)
    let status = slgp()
        .args(["fit-map", "--config", "/nonexistent.json", "--out", dir.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // unknown config field: config error (2)
    let bad_config = dir.path().join("bad.json");
    fs::write(
        &bad_config,
        r#"{"seed":1,"kernel":{"family":"squared_exponential","variance":1.0,"lengthscales":[0.5,0.5]},"p":4,"not_a_field":true}"#,
    )
    .unwrap();
    let status = slgp()
        .args(["rates", "--config", bad_config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // config pointing at a missing data file: data error (3)
    let config_path = dir.path().join("config.json");
    write_small_config(&config_path, &dir.path().join("missing.csv"));
    let status = slgp()
        .args(["fit-map", "--config", config_path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // metrics on mismatched grids: data error (3)
    let f_path = dir.path().join("f.csv");
    let g_path = dir.path().join("g.csv");
    fs::write(&f_path, "x1,t1,density\n0,0.0,1\n0,0.5,1\n0,1.0,1\n").unwrap();
    fs::write(&g_path, "x1,t1,density\n0,0.0,1\n0,1.0,1\n").unwrap();
    let status = slgp()
        .args([
            "metrics",
            "--f",
            f_path.to_str().unwrap(),
            "--g",
            g_path.to_str().unwrap(),
            "--out",
            dir.path().join("r.json").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn malformed_rows_are_reported_but_tolerated() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("data.csv");
    write_small_csv(&data_path);
    // append one malformed row
    let mut text = fs::read_to_string(&data_path).unwrap();
    text.push_str("A0,2019-02-01,not_a_number,300,7.0,46.0\n");
    fs::write(&data_path, text).unwrap();
    let config_path = dir.path().join("config.json");
    write_small_config(&config_path, &data_path);
    let fit_dir = dir.path().join("fit");
    let output = slgp()
        .args(["fit-map", "--config", config_path.to_str().unwrap(), "--out", fit_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("rejected row at line 152"), "stderr: {stderr}");
    let fit_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fit_dir.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit_json["rejected_rows"], 1);
}
