//! Exact and entropic discrete transport with the half-squared distance
//! cost, c-transforms and c-subdifferentials.

mod simplex;
mod sinkhorn;
mod spread;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cost;
use crate::io::fmt_f64;
use crate::measures::DiscreteMeasure;
use crate::Vec3;

pub use spread::{mean_spacing, monge_spread, SpreadReport, SPREAD_TAU};

/// Largest number of points on either side accepted by the exact solver.
pub const MAX_EXACT_SIZE: usize = 5000;

/// Sparse coupling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    /// `(i, j, mass)` sorted by `(i, j)`.
    pub entries: Vec<(usize, usize, f64)>,
    /// Total cost `sum gamma_ij c_ij`.
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for &(i, _, m) in &self.entries {
            s[i] += m;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for &(_, j, m) in &self.entries {
            s[j] += m;
        }
        s
    }

    /// Largest absolute deviation of either marginal.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.row_sums().iter().zip(a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let c = self.col_sums().iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        r.max(c)
    }

    /// Swap the roles of sources and targets.
    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(i, j, m)| (j, i, m)).collect();
        entries.sort_by_key(|p| (p.0, p.1));
        Self { rows: self.cols, cols: self.rows, entries, cost: self.cost }
    }

    /// Sparse CSV `i, j, mass`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["i", "j", "mass"])?;
        for &(i, j, m) in &self.entries {
            w.write_record([i.to_string(), j.to_string(), fmt_f64(m)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Potentials `u` on sources and `v = u^c` on targets with
/// `u_i + v_j + c_ij >= 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Most negative `u_i + v_j + c_ij` (zero when feasible).
    pub infeasibility: f64,
    /// Largest `u_i + v_j + c_ij` over plan support.
    pub support_slack: f64,
    /// `max |u - (u^c)^c|`.
    pub cconvex_residual: f64,
}

impl DualPair {
    /// Write `index, u` and `index, u_c` tables.
    pub fn write_csv(&self, u_path: &Path, v_path: &Path) -> Result<()> {
        for (path, vals, name) in [(u_path, &self.u, "u"), (v_path, &self.v, "u_c")] {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(["index", name])?;
            for (k, x) in vals.iter().enumerate() {
                w.write_record([k.to_string(), fmt_f64(*x)])?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverStats {
    pub solver: String,
    pub rows: usize,
    pub cols: usize,
    pub iterations: usize,
    /// Zero-reduced-cost arcs carrying no flow; nonzero means the optimum
    /// may not be unique.
    pub ties: Option<usize>,
    pub marginal_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportResult {
    pub plan: TransportPlan,
    pub duals: DualPair,
    /// `sqrt(sum gamma_ij |x_i - y_j|^2 / 2)`.
    pub w2: f64,
    pub primal: f64,
    /// `-sum u a - sum v b`.
    pub dual: f64,
    /// `|primal - dual| / max(1, primal)`.
    pub gap: f64,
    pub stats: SolverStats,
}

/// `v_j = max_i (-c(x_i, y_j) - u_i)`.
pub fn c_transform(u: &[f64], from: &[Vec3], to: &[Vec3]) -> Vec<f64> {
    to.par_iter()
        .map(|y| from.iter().zip(u).map(|(x, ui)| -cost(x, y) - ui).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Replace `u` by `(u^c)^c`, set `v = u^c`, and shift so `u_0 = 0`.
pub fn tighten(u: &[f64], xs: &[Vec3], ys: &[Vec3]) -> (Vec<f64>, Vec<f64>) {
    let v = c_transform(u, xs, ys);
    let mut u2 = c_transform(&v, ys, xs);
    let mut v = v;
    let shift = u2.first().copied().unwrap_or(0.0);
    u2.iter_mut().for_each(|x| *x -= shift);
    v.iter_mut().for_each(|x| *x += shift);
    (u2, v)
}

/// Targets `j` with `u_i + v_j + c_ij <= tol`; the minimiser is always
/// included.
pub fn c_subdifferential(duals: &DualPair, xs: &[Vec3], ys: &[Vec3], i: usize, tol: f64) -> Vec<usize> {
    let slack: Vec<f64> = ys.iter().zip(&duals.v).map(|(y, vj)| duals.u[i] + vj + cost(&xs[i], y)).collect();
    let best = (0..ys.len()).min_by(|&p, &q| slack[p].total_cmp(&slack[q]));
    let mut out: Vec<usize> = (0..ys.len()).filter(|&j| slack[j] <= tol).collect();
    if let Some(b) = best {
        if !out.contains(&b) {
            out.push(b);
            out.sort_unstable();
        }
    }
    out
}

fn check_inputs(xs: &[Vec3], a: &[f64], ys: &[Vec3], b: &[f64]) -> Result<()> {
    if xs.len() != a.len() || ys.len() != b.len() {
        return Err(Error::InvalidArgument("point and mass counts differ".into()));
    }
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidArgument("empty measure".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-9 {
        return Err(Error::Unbalanced { source_mass: sa, target_mass: sb });
    }
    if a.iter().chain(b).any(|m| !(*m >= 0.0)) {
        return Err(Error::InvalidArgument("negative mass".into()));
    }
    Ok(())
}

fn finish(
    xs: &[Vec3],
    a: &[f64],
    ys: &[Vec3],
    b: &[f64],
    entries: Vec<(usize, usize, f64)>,
    u_raw: &[f64],
    stats: SolverStats,
) -> TransportResult {
    let primal: f64 = entries.iter().map(|&(i, j, m)| m * cost(&xs[i], &ys[j])).sum();
    let (u, v) = tighten(u_raw, xs, ys);
    let dual = -u.iter().zip(a).map(|(x, m)| x * m).sum::<f64>() - v.iter().zip(b).map(|(x, m)| x * m).sum::<f64>();
    let infeasibility = xs
        .par_iter()
        .zip(&u)
        .map(|(x, ui)| ys.iter().zip(&v).map(|(y, vj)| ui + vj + cost(x, y)).fold(0.0, f64::min))
        .reduce(|| 0.0, f64::min);
    let support_slack = entries.iter().map(|&(i, j, _)| u[i] + v[j] + cost(&xs[i], &ys[j])).fold(0.0, f64::max);
    let back = c_transform(&c_transform(&u, xs, ys), ys, xs);
    let cconvex_residual = u.iter().zip(&back).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let plan = TransportPlan { rows: xs.len(), cols: ys.len(), entries, cost: primal };
    TransportResult {
        w2: primal.max(0.0).sqrt(),
        gap: (primal - dual).abs() / primal.max(1.0),
        duals: DualPair { u, v, infeasibility, support_slack, cconvex_residual },
        primal,
        dual,
        plan,
        stats,
    }
}

/// Exact optimal plan between weighted point clouds.
pub fn solve_exact_points(xs: &[Vec3], a: &[f64], ys: &[Vec3], b: &[f64]) -> Result<TransportResult> {
    check_inputs(xs, a, ys, b)?;
    if xs.len() > MAX_EXACT_SIZE || ys.len() > MAX_EXACT_SIZE {
        return Err(Error::SizeExceeded { rows: xs.len(), cols: ys.len() });
    }
    // Rescale target masses so both totals agree to the last bit.
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let b: Vec<f64> = b.iter().map(|m| m * sa / sb).collect();
    let max_pivots = 200 * (xs.len() + ys.len()) * (xs.len() + ys.len()).max(100);
    let out = simplex::network_simplex(xs, a, ys, &b, max_pivots)?;
    let u_raw: Vec<f64> = out.pi[..xs.len()].to_vec();
    let ties = if xs.len() * ys.len() <= 1_000_000 {
        Some(simplex::count_ties(xs, ys, &out.pi, &out.flows, 1e-12))
    } else {
        None
    };
    let plan_tmp = TransportPlan { rows: xs.len(), cols: ys.len(), entries: out.flows.clone(), cost: 0.0 };
    let stats = SolverStats {
        solver: "exact".into(),
        rows: xs.len(),
        cols: ys.len(),
        iterations: out.pivots,
        ties,
        marginal_error: plan_tmp.marginal_error(a, &b),
    };
    Ok(finish(xs, a, ys, &b, out.flows, &u_raw, stats))
}

/// Exact optimal plan between two measures.
pub fn solve_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportResult> {
    solve_exact_points(&mu.positions(), &mu.masses, &nu.positions(), &nu.masses)
}

/// Entropic plan; the returned potentials are de-biased by one c-transform.
pub fn solve_entropic_points(
    xs: &[Vec3],
    a: &[f64],
    ys: &[Vec3],
    b: &[f64],
    eps: f64,
    max_iters: usize,
) -> Result<TransportResult> {
    check_inputs(xs, a, ys, b)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let out = sinkhorn::sinkhorn(xs, a, ys, b, eps, max_iters, 1e-7)?;
    let cols = ys.len();
    let peak = out.plan.iter().cloned().fold(0.0, f64::max);
    let entries: Vec<(usize, usize, f64)> = out
        .plan
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 1e-14 * peak)
        .map(|(k, m)| (k / cols, k % cols, *m))
        .collect();
    let u_raw: Vec<f64> = out.f.iter().map(|f| -f).collect();
    let plan_tmp = TransportPlan { rows: xs.len(), cols, entries: entries.clone(), cost: 0.0 };
    let stats = SolverStats {
        solver: "entropic".into(),
        rows: xs.len(),
        cols,
        iterations: out.iterations,
        ties: None,
        marginal_error: plan_tmp.marginal_error(a, b).max(out.residual.min(f64::MAX)),
    };
    Ok(finish(xs, a, ys, b, entries, &u_raw, stats))
}

pub fn solve_entropic(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    eps: f64,
    max_iters: usize,
) -> Result<TransportResult> {
    solve_entropic_points(&mu.positions(), &mu.masses, &nu.positions(), &nu.masses, eps, max_iters)
}

/// Solver selection as it appears in configuration files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSpec {
    #[default]
    Exact,
    Entropic {
        epsilon: f64,
        #[serde(default = "default_iters")]
        max_iters: usize,
    },
}

fn default_iters() -> usize {
    20_000
}

pub fn solve(mu: &DiscreteMeasure, nu: &DiscreteMeasure, spec: &SolverSpec) -> Result<TransportResult> {
    match spec {
        SolverSpec::Exact => solve_exact(mu, nu),
        SolverSpec::Entropic { epsilon, max_iters } => solve_entropic(mu, nu, *epsilon, *max_iters),
    }
}
