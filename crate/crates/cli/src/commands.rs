//! Subcommand bodies.

use std::path::{Path, PathBuf};

use otsurf::geometry::{body_metrics, conerad};
use otsurf::measures::{make_measure, sample_surface};
use otsurf::transport::{mean_spacing, monge_spread, solve, SPREAD_TAU};
use otsurf::ConvexBody;
use serde_json::json;
use std::sync::Arc;

use crate::config::{ExperimentConfig, Scenario};
use crate::error::{CliError, Context, Result};
use crate::experiment::{run_experiment, ExperimentRecord, VERSION};
use crate::report::{emit_report, write_json};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.into(), source: e }
}

/// Body metrics and interior-cone radii, written to `geometry.json`.
pub fn geometry(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let body = ConvexBody::from_spec(&cfg.body).ctx(|| "body".into())?;
    let budget = cfg.n_list[0];
    let metrics = body_metrics(&body, budget, cfg.seed).ctx(|| "body metrics".into())?;
    let cones = [0.5, 35.0 / 36.0]
        .iter()
        .map(|&t| conerad(&body, t, budget, cfg.seed).ctx(|| format!("conerad({t})")))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let path = out.join("geometry.json");
    let doc = json!({
        "version": VERSION,
        "config": cfg,
        "is_c1": body.is_c1(),
        "analytic_area": body.analytic_area(),
        "metrics": metrics,
        "conerad": cones,
    });
    write_json(&path, &doc)?;
    Ok(path)
}

/// One transport instance at the first sample count of the config.
pub fn solve_one(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let body = ConvexBody::from_spec(&cfg.body).ctx(|| "body".into())?;
    let n = cfg.n_list[0];
    let sa = Arc::new(sample_surface(&body, n, cfg.seed).ctx(|| "source sampling".into())?);
    let sb = Arc::new(sample_surface(&body, n, cfg.seed ^ 1).ctx(|| "target sampling".into())?);
    let mu = make_measure(&sa, &cfg.measures.source).ctx(|| "source measure".into())?;
    let nu = make_measure(&sb, &cfg.measures.target).ctx(|| "target measure".into())?;
    let res = solve(&mu, &nu, &cfg.solver).ctx(|| "transport".into())?;
    let ys = nu.positions();
    let spread = monge_spread(&res.plan, &mu.positions(), &ys, SPREAD_TAU, None);

    std::fs::create_dir_all(out).map_err(io_err(out))?;
    mu.write_csv(&out.join("mu.csv")).ctx(|| "writing mu.csv".into())?;
    nu.write_csv(&out.join("nu.csv")).ctx(|| "writing nu.csv".into())?;
    res.plan.write_csv(&out.join("plan.csv")).ctx(|| "writing plan.csv".into())?;
    res.duals.write_csv(&out.join("u.csv"), &out.join("v.csv")).ctx(|| "writing potentials".into())?;
    let path = out.join("solve.json");
    let doc = json!({
        "version": VERSION,
        "config": cfg,
        "W2": res.w2,
        "primal": res.primal,
        "dual": res.dual,
        "gap": res.gap,
        "stats": res.stats,
        "cconvex_residual": res.duals.cconvex_residual,
        "max_spread": spread.max_spread,
        "mean_spread": spread.mean_spread,
        "split_mass": spread.split_mass,
        "spacing": mean_spacing(&ys),
    });
    write_json(&path, &doc)?;
    Ok(path)
}

/// The full checker battery. The caller maps `passed()` to the exit code.
pub fn verify(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentRecord> {
    let mut cfg = cfg.clone();
    cfg.scenario = Scenario::VerifyAll;
    let rec = run_experiment(&cfg)?;
    emit_report(&rec, out)?;
    Ok(rec)
}

pub fn experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentRecord> {
    let rec = run_experiment(cfg)?;
    emit_report(&rec, out)?;
    Ok(rec)
}
