//! Explicit constants: the stay-away bound, the smallness threshold, and
//! Lipschitz control of potentials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, GeodesicGraph};
use crate::transport::{c_subdifferential, DualPair, TransportPlan};
use crate::Vec3;

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    // Fixed panels first: a single coarse Simpson step can agree with its
    // halves by accident and stop early.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 50)
        })
        .sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StayAwayConstant {
    pub n: usize,
    pub rho0: f64,
    pub conerad: f64,
    pub diam: f64,
    /// Surface measure of the unit sphere of dimension `n - 2`.
    pub sphere_measure: f64,
    pub min_term: f64,
    /// `int_0^{pi/2} cos^{n+2} sin^{n-2}`.
    pub integral: f64,
    pub value: f64,
}

impl StayAwayConstant {
    pub fn report(&self) -> VerificationReport {
        VerificationReport::new("stay_away_constant", "stay-away constant", 1, 0.0, 0.0)
            .with_constant(self.value)
            .with_config(serde_json::to_value(self).unwrap_or_default())
    }
}

/// The stay-away constant from the density floor `rho0`, `conerad(theta)`
/// and the diameter.
pub fn stay_away_constant(n: usize, diam: f64, conerad: f64, rho0: f64) -> Result<StayAwayConstant> {
    if n < 2 {
        return Err(Error::DimensionTooLow(n));
    }
    if !(rho0 > 0.0 && diam > 0.0 && conerad > 0.0) {
        return Err(Error::InvalidArgument("rho0, diameter and conerad must be positive".into()));
    }
    let nf = n as f64;
    let k = (nf - 1.0) / 2.0;
    let sphere_measure = 2.0 * std::f64::consts::PI.powf(k) / gamma(k);
    let r2 = conerad * conerad;
    let min_term = (r2 / (48.0 * diam * diam + 2.0 * r2)).min(conerad / (8.0 * diam)).min(1.0 / 16.0);
    let integral = integrate(
        |p: f64| p.cos().powi(n as i32 + 2) * p.sin().powi(n as i32 - 2),
        0.0,
        std::f64::consts::FRAC_PI_2,
        1e-15,
    );
    let inner =
        2f64.powi(n as i32 - 2) * rho0 * sphere_measure / (nf * (nf + 1.0)) * min_term.powi(n as i32) * integral;
    Ok(StayAwayConstant {
        n,
        rho0,
        conerad,
        diam,
        sphere_measure,
        min_term,
        integral,
        value: inner.powf(-1.0 / (nf + 1.0)),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StayAwayCheck {
    pub constant: f64,
    pub w2: f64,
    /// `C * W2^{2/(n+2)}`.
    pub bound: f64,
    pub pairs: usize,
    /// Support pairs on opposite sides, outside the estimate.
    pub skipped: usize,
    pub worst_gap: f64,
    pub worst_ratio: f64,
    pub pass: bool,
}

impl StayAwayCheck {
    pub fn report(&self) -> VerificationReport {
        VerificationReport::new(
            "stay_away",
            "stay-away estimate for same-side pairs",
            self.pairs,
            self.worst_ratio,
            1.0,
        )
        .with_constant(self.constant)
        .with_config(serde_json::to_value(self).unwrap_or_default())
    }
}

/// Tangential gap `|proj_X(X - Xb)|` over the same-side support pairs of a
/// plan, relative to the stay-away bound.
pub fn stay_away_check(
    body: &ConvexBody,
    xs: &[Vec3],
    ys: &[Vec3],
    plan: &TransportPlan,
    w2: f64,
    constant: f64,
) -> Result<StayAwayCheck> {
    let n = body.n();
    if n < 2 {
        return Err(Error::DimensionTooLow(n));
    }
    let bound = constant * w2.max(0.0).powf(2.0 / (n as f64 + 2.0));
    let mut pairs = 0;
    let mut skipped = 0;
    let mut worst_gap: f64 = 0.0;
    for &(i, j, m) in &plan.entries {
        if m <= 0.0 {
            continue;
        }
        let p = body.normal_at(&xs[i])?;
        let q = body.normal_at(&ys[j])?;
        if p.normal.dot(&q.normal) <= 0.0 {
            skipped += 1;
            continue;
        }
        pairs += 1;
        let d = xs[i] - ys[j];
        worst_gap = worst_gap.max((d - p.normal * p.normal.dot(&d)).norm());
    }
    let worst_ratio = if worst_gap <= 1e-15 {
        0.0
    } else if bound > 0.0 {
        worst_gap / bound
    } else {
        f64::INFINITY
    };
    Ok(StayAwayCheck { constant, w2, bound, pairs, skipped, worst_gap, worst_ratio, pass: worst_ratio <= 1.0 })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Threshold {
    /// `conerad(35/36) / (64 C)`.
    pub local_term: f64,
    /// `conerad(35/36) / (16 C C_geo L^2)`.
    pub global_term: f64,
    pub rhs: f64,
    /// Largest `W2` with `W2^{2/(n+2)} < rhs`.
    pub w2_threshold: f64,
    pub w2: Option<f64>,
    pub verdict: Option<bool>,
}

impl Threshold {
    pub fn report(&self) -> VerificationReport {
        let mut r = VerificationReport::new("threshold", "smallness threshold on W2", 1, 0.0, 0.0)
            .with_constant(self.rhs)
            .with_config(serde_json::to_value(self).unwrap_or_default());
        if self.verdict == Some(false) {
            r = r.note("W2 is above the analytic threshold; the regime statement does not apply");
        }
        r
    }
}

/// Right-hand side of the smallness condition on `W2^{2/(n+2)}` and the
/// verdict for a given `W2`.
pub fn threshold_eval(
    n: usize,
    conerad_3536: f64,
    stay_away: f64,
    geodesic_ratio: f64,
    radial_lipschitz: f64,
    w2: Option<f64>,
) -> Result<Threshold> {
    if n < 2 {
        return Err(Error::DimensionTooLow(n));
    }
    let local_term = conerad_3536 / (64.0 * stay_away);
    let global_term = conerad_3536 / (16.0 * stay_away * geodesic_ratio * radial_lipschitz.powi(2));
    let rhs = local_term.max(global_term);
    let e = 2.0 / (n as f64 + 2.0);
    let verdict = w2.map(|w| w.max(0.0).powf(e) < rhs);
    Ok(Threshold { local_term, global_term, rhs, w2_threshold: rhs.powf(1.0 / e), w2, verdict })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonsplittingRow {
    pub delta: f64,
    /// `delta * conerad / (2 C_geo)`.
    pub threshold: f64,
    pub applicable: bool,
    /// `delta * conerad`.
    pub radius: f64,
    /// Largest distance from a source to a member of its c-subdifferential.
    pub worst_distance: f64,
    pub exceptions: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzCheck {
    /// Largest `|u_i - u_j| / d_ij` over graph edges.
    pub l_hat: f64,
    pub bound: f64,
    pub slack: f64,
    pub edges: usize,
    pub pass: bool,
    #[serde(default)]
    pub nonsplitting: Vec<NonsplittingRow>,
}

impl LipschitzCheck {
    pub fn report(&self) -> VerificationReport {
        let mut r = VerificationReport::new(
            "potential_lipschitz",
            "Lipschitz bound on the dual potential and nonsplitting",
            self.edges,
            self.l_hat,
            self.slack * self.bound,
        )
        .with_config(serde_json::to_value(self).unwrap_or_default());
        let exceptions: usize = self.nonsplitting.iter().filter(|r| r.applicable).map(|r| r.exceptions).sum();
        if exceptions > 0 {
            r.pass = false;
            r = r.note(format!("{exceptions} nonsplitting exceptions"));
        }
        r
    }
}

/// Discrete Lipschitz constant of `u` along the edges of `graph`, compared
/// with `bound` at 20% slack.
pub fn potential_lipschitz_check(graph: &GeodesicGraph, u: &[f64], bound: f64) -> Result<LipschitzCheck> {
    if u.len() != graph.len() {
        return Err(Error::InvalidArgument("potential length differs from the graph".into()));
    }
    let edges = graph.edges();
    let l_hat = edges.iter().filter(|e| e.2 > 0.0).map(|&(i, j, d)| (u[i] - u[j]).abs() / d).fold(0.0, f64::max);
    let slack = 1.2;
    Ok(LipschitzCheck {
        l_hat,
        bound,
        slack,
        edges: edges.len(),
        pass: l_hat <= slack * bound,
        nonsplitting: Vec::new(),
    })
}

/// For each `delta` whose Lipschitz condition holds, count sources with a
/// discrete c-subdifferential member outside the ball of radius
/// `delta * conerad`.
pub fn nonsplitting_scan(
    xs: &[Vec3],
    ys: &[Vec3],
    duals: &DualPair,
    l_hat: f64,
    conerad: f64,
    geodesic_ratio: f64,
    deltas: &[f64],
) -> Vec<NonsplittingRow> {
    let scale = xs.iter().chain(ys).map(|p| p.norm_squared()).fold(1.0, f64::max);
    let tol = 1e-10 * scale;
    let reach: Vec<f64> = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            c_subdifferential(duals, xs, ys, i, tol).into_iter().map(|j| (xs[i] - ys[j]).norm()).fold(0.0, f64::max)
        })
        .collect();
    deltas
        .iter()
        .map(|&delta| {
            let threshold = delta * conerad / (2.0 * geodesic_ratio);
            let radius = delta * conerad;
            let applicable = l_hat < threshold;
            let worst_distance = reach.iter().cloned().fold(0.0, f64::max);
            let exceptions = if applicable { reach.iter().filter(|&&r| r >= radius).count() } else { 0 };
            NonsplittingRow { delta, threshold, applicable, radius, worst_distance, exceptions }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial() {
        let v = integrate(|x| x * x * x - x, 0.0, 2.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-13);
    }
}
