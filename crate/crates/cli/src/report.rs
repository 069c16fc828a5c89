//! Writing experiment records to disk.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use otsurf::io::fmt_f64;
use otsurf::VerificationReport;
use serde::Serialize;

use crate::config::Scenario;
use crate::error::{CliError, Result};
use crate::experiment::{ExperimentRecord, PointResult};

/// Compact JSON with every float at seventeen significant digits.
struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let bytes = to_json(value)?;
    std::fs::write(path, bytes).map_err(|e| CliError::Io { path: path.into(), source: e })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.into(), source: e })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { path: path.into(), source },
        other => CliError::ConfigInvalid(format!("{}: {other:?}", path.display())),
    })
}

/// Optional value as a CSV cell.
fn cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// One row per grid point; parameter and metric columns are the union over
/// all points.
pub fn write_results_csv(path: &Path, results: &[PointResult]) -> Result<()> {
    let params: BTreeSet<&str> = results.iter().flat_map(|p| p.params.keys().map(String::as_str)).collect();
    let metrics: BTreeSet<&str> = results.iter().flat_map(|p| p.metrics.keys().map(String::as_str)).collect();
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> =
        ["index", "seed", "N"].iter().map(|s| s.to_string()).chain(params.iter().map(|s| s.to_string())).collect();
    header.extend(["W2", "max_spread", "mean_spread", "split_mass", "spacing"].map(String::from));
    header.extend(metrics.iter().map(|s| s.to_string()));
    header.push("checks_passed".into());
    w.write_record(&header)?;
    for p in results {
        let mut row = vec![p.index.to_string(), p.seed.to_string(), p.n.to_string()];
        row.extend(params.iter().map(|k| cell(p.params.get(*k).copied())));
        row.extend([p.w2, p.max_spread, p.mean_spread, p.split_mass, p.spacing].map(fmt_f64));
        row.extend(metrics.iter().map(|k| cell(p.metrics.get(*k).copied())));
        row.push(p.reports.iter().all(|r| r.pass).to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::Io { path: path.into(), source: e })?;
    Ok(())
}

/// Summary of checker reports; `point` is empty for scenario-level reports.
pub fn write_checks_csv(path: &Path, rows: &[(Option<usize>, &VerificationReport)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "point",
        "checker",
        "anchor",
        "samples",
        "worst_violation",
        "tolerance",
        "implied_constant",
        "pass",
        "hard",
        "notes",
    ])?;
    for (point, r) in rows {
        w.write_record([
            point.map(|i| i.to_string()).unwrap_or_default(),
            r.checker.clone(),
            r.anchor.clone(),
            r.samples.to_string(),
            fmt_f64(r.worst_violation),
            fmt_f64(r.tolerance),
            cell(r.implied_constant),
            r.pass.to_string(),
            crate::checks::is_hard(r).to_string(),
            r.notes.join("; "),
        ])?;
    }
    w.flush().map_err(|e| CliError::Io { path: path.into(), source: e })?;
    Ok(())
}

fn write_xy(path: &Path, x: &str, y: &str, extra: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header: Vec<&str> = [x, y].into_iter().chain(extra.iter().copied()).collect();
    w.write_record(&header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush().map_err(|e| CliError::Io { path: path.into(), source: e })?;
    Ok(())
}

fn metric(p: &PointResult, k: &str) -> f64 {
    p.metrics.get(k).or_else(|| p.params.get(k)).copied().unwrap_or(f64::NAN)
}

/// Write the full record and its tables into `dir`. Returns the files written.
pub fn emit_report(record: &ExperimentRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut files = Vec::new();
    let mut out = |name: &str| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };

    write_json(&out("record.json"), record)?;
    write_results_csv(&out("results.csv"), &record.results)?;
    let rows: Vec<(Option<usize>, &VerificationReport)> = record
        .reports
        .iter()
        .map(|r| (None, r))
        .chain(record.results.iter().flat_map(|p| p.reports.iter().map(move |r| (Some(p.index), r))))
        .collect();
    write_checks_csv(&out("checks.csv"), &rows)?;

    let res = &record.results;
    match record.config.scenario {
        Scenario::LensCounterexample => {
            let mut sorted: Vec<&PointResult> = res.iter().collect();
            sorted.sort_by(|a, b| {
                (a.n, metric(a, "delta"), metric(a, "k"))
                    .partial_cmp(&(b.n, metric(b, "delta"), metric(b, "k")))
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let mut w = csv_writer(&out("lens_sweep.csv"))?;
            w.write_record(["k", "W2", "max_spread", "split_mass", "delta", "N", "deficit", "crossing_mass"])?;
            for p in &sorted {
                let mut row: Vec<String> =
                    [metric(p, "k"), p.w2, p.max_spread, p.split_mass, metric(p, "delta")].map(fmt_f64).to_vec();
                row.push(p.n.to_string());
                row.push(fmt_f64(metric(p, "deficit")));
                row.push(fmt_f64(metric(p, "crossing_mass")));
                w.write_record(&row)?;
            }
            w.flush().map_err(|e| CliError::Io { path: dir.join("lens_sweep.csv"), source: e })?;
            let xy: Vec<Vec<f64>> =
                sorted.iter().map(|p| vec![metric(p, "k"), p.w2, metric(p, "delta"), p.n as f64]).collect();
            write_xy(&out("plot_k_w2.csv"), "k", "W2", &["delta", "N"], &xy)?;
            let xy: Vec<Vec<f64>> =
                sorted.iter().map(|p| vec![p.w2, p.max_spread, metric(p, "k"), p.n as f64]).collect();
            write_xy(&out("plot_w2_spread.csv"), "W2", "max_spread", &["k", "N"], &xy)?;
        }
        Scenario::ApproximationPipeline => {
            let xy: Vec<Vec<f64>> = res
                .iter()
                .map(|p| {
                    vec![
                        metric(p, "R"),
                        metric(p, "hausdorff"),
                        p.w2,
                        metric(p, "sup_potential_difference"),
                        p.n as f64,
                    ]
                })
                .collect();
            write_xy(&out("plot_hausdorff.csv"), "R", "hausdorff", &["W2", "sup_potential_difference", "N"], &xy)?;
        }
        _ => {
            let xy: Vec<Vec<f64>> =
                res.iter().map(|p| vec![p.w2, p.max_spread, p.n as f64, metric(p, "strength"), p.spacing]).collect();
            write_xy(&out("plot_w2_spread.csv"), "W2", "max_spread", &["N", "strength", "spacing"], &xy)?;
        }
    }
    Ok(files)
}
