use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use otsurf::DensitySpec;
use otsurf_cli::config::{ExperimentConfig, Scenario};
use otsurf_cli::experiment::{loglog_slope, with_strength, ExperimentRecord};
use otsurf_cli::{emit_report, run_experiment, CliError};

fn parse(s: &str) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::from_json_str(s)
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

/// Record JSON with the timing block removed.
fn without_timing(p: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(&read(p)).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn minimal_config_takes_defaults() {
    let cfg = parse(r#"{"scenario": "sphere_sanity"}"#).unwrap();
    assert_eq!(cfg, ExperimentConfig::new(Scenario::SphereSanity));
    assert_eq!(cfg.n_list, vec![500]);
    assert!(cfg.checkers.qqconv && cfg.checkers.holder_fit);
}

#[test]
fn config_round_trips() {
    let mut cfg = ExperimentConfig::new(Scenario::LensCounterexample);
    cfg.n_list = vec![100, 200];
    cfg.seed = 42;
    cfg.sweep.lens.k = vec![1.0, 3.0];
    cfg.checkers.threshold = false;
    let s = serde_json::to_string(&cfg).unwrap();
    assert_eq!(parse(&s).unwrap(), cfg);
}

#[test]
fn unknown_keys_are_rejected() {
    for s in [
        r#"{"scenario": "sphere_sanity", "bogus": 1}"#,
        r#"{"scenario": "sphere_sanity", "sweep": {"lens": {"k": [1], "extra": 0}}}"#,
        r#"{"scenario": "sphere_sanity", "checkers": {"qqconv": true, "nope": false}}"#,
        r#"{"scenario": "sphere_sanity", "measures": {"source": {"kind": "uniform", "amplitude": 1}}}"#,
        r#"{"scenario": "sphere_sanity", "solver": {"solver": "exact", "epsilon": 0.1}}"#,
    ] {
        assert!(matches!(parse(s), Err(CliError::ConfigInvalid(_))), "{s}");
    }
}

#[test]
fn invalid_values_are_rejected() {
    for s in [
        r#"{"scenario": "nope"}"#,
        r#"{"scenario": "sphere_sanity", "N": []}"#,
        r#"{"scenario": "sphere_sanity", "N": [8]}"#,
        r#"{"scenario": "monge_regime", "sweep": {"perturbations": [-0.1]}}"#,
        r#"{"scenario": "approximation_pipeline", "sweep": {"hull_radii": [0]}}"#,
        r#"{"scenario": "verify_all", "solver": {"solver": "entropic", "epsilon": 0}}"#,
        r#"[1, 2]"#,
    ] {
        assert!(matches!(parse(s), Err(CliError::ConfigInvalid(_))), "{s}");
    }
}

#[test]
fn strength_replacement() {
    let t = DensitySpec::Tilt { amplitude: 0.1, direction: [1.0, 0.0, 0.0] };
    assert_eq!(with_strength(&t, 0.3), DensitySpec::Tilt { amplitude: 0.3, direction: [1.0, 0.0, 0.0] });
    assert_eq!(with_strength(&DensitySpec::Uniform, 0.3), DensitySpec::Uniform);
}

#[test]
fn loglog_slope_of_power_law() {
    let x = [1.0, 2.0, 4.0, 8.0];
    let y: Vec<f64> = x.iter().map(|k: &f64| 3.0 * k.powf(-0.5)).collect();
    assert!((loglog_slope(&x, &y) + 0.5).abs() < 1e-12);
}

#[test]
fn empty_record_is_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let rec = ExperimentRecord::empty(ExperimentConfig::new(Scenario::SphereSanity));
    emit_report(&rec, dir.path()).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("record.json"))).unwrap();
    assert_eq!(v["results"], serde_json::json!([]));
    assert_eq!(v["config"]["scenario"], "sphere_sanity");
    assert!(rec.passed());
}

#[test]
fn identical_measures_give_zero_transport() {
    let mut cfg =
        parse(r#"{"scenario": "sphere_sanity", "N": [500], "measures": {"target": {"kind": "uniform"}}}"#).unwrap();
    cfg.seed = 5;
    let rec = run_experiment(&cfg).unwrap();
    let p = &rec.results[0];
    assert_eq!(p.w2, 0.0);
    assert_eq!(p.max_spread, 0.0);
    assert!(rec.passed());
    assert!(p.reports.iter().all(|r| r.pass), "{:?}", p.reports.iter().filter(|r| !r.pass).collect::<Vec<_>>());
}

#[test]
fn experiment_is_deterministic() {
    let cfg = parse(
        r#"{"scenario": "monge_regime", "N": [200, 300], "seed": 9,
            "body": {"shape": "stadium2d", "half_length": 1.0, "cap_radius": 0.5},
            "sweep": {"perturbations": [0.2, 0.1]}}"#,
    )
    .unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let rec = run_experiment(&cfg).unwrap();
    emit_report(&rec, a.path()).unwrap();
    emit_report(&run_experiment(&cfg).unwrap(), b.path()).unwrap();
    for f in ["results.csv", "checks.csv", "plot_w2_spread.csv"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    assert_eq!(without_timing(&a.path().join("record.json")), without_timing(&b.path().join("record.json")));

    // Re-emitting the same record is bit-exact, timing included.
    let c = tempfile::tempdir().unwrap();
    emit_report(&rec, c.path()).unwrap();
    assert_eq!(read(&a.path().join("record.json")), read(&c.path().join("record.json")));
}

#[test]
fn floats_carry_seventeen_digits() {
    let mut cfg = ExperimentConfig::new(Scenario::SphereSanity);
    cfg.n_list = vec![100];
    let dir = tempfile::tempdir().unwrap();
    emit_report(&run_experiment(&cfg).unwrap(), dir.path()).unwrap();
    let text = String::from_utf8(read(&dir.path().join("record.json"))).unwrap();
    let w2 = text.split("\"W2\":").nth(1).unwrap().split([',', '}']).next().unwrap();
    let mantissa = w2.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.replace('.', "").len(), 17, "{w2}");
    let back: f64 = w2.parse().unwrap();
    assert!(back > 0.0);
}

#[test]
fn monge_spread_does_not_grow_as_perturbation_shrinks() {
    let cfg = parse(
        r#"{"scenario": "monge_regime", "N": [400], "seed": 1,
            "body": {"shape": "stadium2d", "half_length": 1.0, "cap_radius": 0.5},
            "sweep": {"perturbations": [0.2, 0.1, 0.05]}}"#,
    )
    .unwrap();
    let rec = run_experiment(&cfg).unwrap();
    let spreads: Vec<f64> = rec.results.iter().map(|p| p.max_spread).collect();
    let spacing = rec.results[0].spacing;
    for w in spreads.windows(2) {
        assert!(w[1] <= w[0] + 0.1 * spacing, "{spreads:?}");
    }
    assert!(rec.results.iter().all(|p| p.reports.iter().any(|r| r.checker == "threshold")));
}

#[test]
fn lens_sweep_table() {
    let cfg =
        parse(r#"{"scenario": "lens_counterexample", "N": [400], "sweep": {"lens": {"k": [1, 2, 4, 8]}}}"#).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&run_experiment(&cfg).unwrap(), dir.path()).unwrap();
    let mut r = csv::Reader::from_path(dir.path().join("lens_sweep.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..4], ["k", "W2", "max_spread", "split_mass"]);
    let rows: Vec<Vec<f64>> =
        r.records().map(|rec| rec.unwrap().iter().map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [1.0, 2.0, 4.0, 8.0]);
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1], "W2 not decreasing: {rows:?}");
    }
    // The top cap holds more of mu than of nu, and the excess has to cross.
    for row in &rows {
        assert!(row[6] > 0.0 && row[7] >= row[6] * (1.0 - 1e-9), "{row:?}");
    }
}

#[test]
fn approximation_pipeline_reports() {
    let cfg = parse(
        r#"{"scenario": "approximation_pipeline", "N": [200],
            "body": {"shape": "stadium2d", "half_length": 1.0, "cap_radius": 0.5}}"#,
    )
    .unwrap();
    let rec = run_experiment(&cfg).unwrap();
    assert_eq!(rec.results.len(), 4);
    let names: BTreeSet<&str> = rec.all_reports().map(|r| r.checker.as_str()).collect();
    for c in ["hausdorff_decreasing", "potential_convergence", "pushforward_density", "w2_approximation"] {
        assert!(names.contains(c), "{c}");
    }
    assert!(rec.passed());
}

#[test]
fn verify_all_runs_each_checker_once() {
    let mut cfg = ExperimentConfig::new(Scenario::VerifyAll);
    cfg.n_list = vec![300];
    cfg.sweep.qqconv_trials = 200;
    let rec = run_experiment(&cfg).unwrap();
    let names: Vec<&str> = rec.reports.iter().map(|r| r.checker.as_str()).collect();
    let expected = [
        "c_cone",
        "duality",
        "holder_fit",
        "local_to_global",
        "lower_aleksandrov",
        "potential_lipschitz",
        "qqconv",
        "section_convexity",
        "section_locality",
        "stay_away",
        "stay_away_constant",
        "threshold",
        "upper_aleksandrov",
    ];
    assert_eq!(names, expected);
    assert!(rec.reports.iter().all(|r| !r.anchor.is_empty()));
    assert!(rec.passed());
}

#[test]
fn toggles_remove_checkers() {
    let cfg = parse(
        r#"{"scenario": "verify_all", "N": [200],
            "checkers": {"qqconv": false, "lower_aleksandrov": false, "upper_aleksandrov": false, "holder_fit": false}}"#,
    )
    .unwrap();
    let rec = run_experiment(&cfg).unwrap();
    let names: BTreeSet<&str> = rec.reports.iter().map(|r| r.checker.as_str()).collect();
    assert!(!names.contains("qqconv") && !names.contains("holder_fit"));
    assert!(names.contains("duality"));
}

fn otsurf(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_otsurf"))
        .args(args)
        .current_dir(dir)
        .env_remove("OTSURF_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let good =
        write_config(d, "good.json", r#"{"scenario": "verify_all", "N": [200], "sweep": {"qqconv_trials": 100}}"#);
    let out = otsurf(&["verify", "--config", &good, "--out", "good"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("good/checks.csv").exists());

    // A coarse entropic plan leaves a duality gap, which is a hard failure.
    let coarse = write_config(
        d,
        "coarse.json",
        r#"{"scenario": "verify_all", "N": [200], "solver": {"solver": "entropic", "epsilon": 0.5},
            "sweep": {"qqconv_trials": 100}}"#,
    );
    let out = otsurf(&["verify", "--config", &coarse, "--out", "coarse"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));

    let bad = write_config(d, "bad.json", r#"{"scenario": "verify_all", "typo": 1}"#);
    let out = otsurf(&["verify", "--config", &bad, "--out", "bad"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo"));
}

#[test]
fn subcommands_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "c.json", r#"{"scenario": "sphere_sanity", "N": [150], "output": "from_config"}"#);

    let out = otsurf(&["geometry", "--config", &cfg], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g: serde_json::Value = serde_json::from_slice(&read(&d.join("from_config/geometry.json"))).unwrap();
    assert_eq!(g["metrics"]["diam"], 2.0);

    let out = otsurf(&["solve", "--config", &cfg, "--out", "s", "--seed", "7", "--threads", "2"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["mu.csv", "nu.csv", "plan.csv", "u.csv", "v.csv", "solve.json"] {
        assert!(d.join("s").join(f).exists(), "{f}");
    }
    let s: serde_json::Value = serde_json::from_slice(&read(&d.join("s/solve.json"))).unwrap();
    assert_eq!(s["config"]["seed"], 7);
    assert!(s["gap"].as_f64().unwrap() < 1e-8);

    let out = otsurf(&["experiment", "--config", &cfg, "--out", "e"], d);
    assert!(out.status.success());
    assert!(d.join("e/record.json").exists() && d.join("e/results.csv").exists());

    let no_out = write_config(d, "n.json", r#"{"scenario": "sphere_sanity", "N": [150]}"#);
    assert_eq!(otsurf(&["experiment", "--config", &no_out], d).status.code(), Some(2));
}
