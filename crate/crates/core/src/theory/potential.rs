//! Finite-max c-convex potentials and the local-to-global check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConvexPolygon, VerificationReport};
use crate::error::{Error, Result};
use crate::geometry::{cost, ConvexBody, TangentChart};
use crate::Vec3;

/// `u(X) = max_k (-c(X, Z_k) + a_k)`, optionally also maxed with a constant.
///
/// The constant piece is c-convex with c-subdifferential `{X}` at every
/// point where it alone is active, which keeps all subdifferentials close to
/// their base point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticPotential {
    pub slopes: Vec<Vec3>,
    pub offsets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    /// Points where pieces meet with a subdifferential of positive area;
    /// samplings used with the potential should contain them.
    #[serde(default)]
    pub vertices: Vec<Vec3>,
}

impl SyntheticPotential {
    pub fn new(slopes: Vec<Vec3>, offsets: Vec<f64>) -> Result<Self> {
        if slopes.len() != offsets.len() {
            return Err(Error::InvalidArgument("slopes and offsets differ in length".into()));
        }
        if slopes.is_empty() {
            return Err(Error::InvalidArgument("potential needs at least one piece".into()));
        }
        Ok(Self { slopes, offsets, floor: None, vertices: Vec::new() })
    }

    /// Pieces all taking the value `value` at `x0`.
    pub fn through(x0: &Vec3, value: f64, slopes: Vec<Vec3>) -> Result<Self> {
        let offsets = slopes.iter().map(|z| value + cost(x0, z)).collect();
        let mut p = Self::new(slopes, offsets)?;
        p.vertices.push(*x0);
        Ok(p)
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = Some(floor);
        self
    }

    pub fn with_piece(mut self, slope: Vec3, offset: f64) -> Self {
        self.slopes.push(slope);
        self.offsets.push(offset);
        self
    }

    pub fn piece(&self, k: usize, x: &Vec3) -> f64 {
        -cost(x, &self.slopes[k]) + self.offsets[k]
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        let m = (0..self.slopes.len()).map(|k| self.piece(k, x)).fold(f64::NEG_INFINITY, f64::max);
        match self.floor {
            Some(f) => m.max(f),
            None => m,
        }
    }

    pub fn eval_all(&self, xs: &[Vec3]) -> Vec<f64> {
        xs.par_iter().map(|x| self.eval(x)).collect()
    }

    /// Pieces within `tol` of the maximum at `x`.
    pub fn active(&self, x: &Vec3, tol: f64) -> Vec<usize> {
        let u = self.eval(x);
        (0..self.slopes.len()).filter(|&k| self.piece(k, x) >= u - tol).collect()
    }

    pub fn floor_active(&self, x: &Vec3, tol: f64) -> bool {
        self.floor.is_some_and(|f| f >= self.eval(x) - tol)
    }

    /// `max_Y [u(x0) - c(Y, xb) + c(x0, xb) - u(Y)]` over `samples`: at most
    /// zero exactly when `xb` supports `u` at `x0` on the samples.
    pub fn support_defect(&self, x0: &Vec3, xb: &Vec3, samples: &[Vec3]) -> f64 {
        let base = self.eval(x0) + cost(x0, xb);
        samples.par_iter().map(|y| base - cost(y, xb) - self.eval(y)).reduce(|| f64::NEG_INFINITY, f64::max)
    }

    /// With a floor, every c-subdifferential lies within this distance of
    /// its base point: piece `k` is active only within `sqrt(2 (a_k - f))`
    /// of `Z_k`.
    pub fn subdifferential_radius(&self) -> Option<f64> {
        let f = self.floor?;
        Some(self.offsets.iter().map(|a| (2.0 * (a - f)).max(0.0).sqrt()).fold(0.0, f64::max))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalToGlobal {
    pub active: usize,
    pub extreme_points: usize,
    pub tested: usize,
    /// Largest support defect of a lifted local subgradient.
    pub worst_defect: f64,
    /// Largest distance between a lifted extreme point and its slope point.
    pub reconstruction_error: f64,
    pub spacing: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl LocalToGlobal {
    pub fn report(&self) -> VerificationReport {
        let mut r = VerificationReport::new(
            "local_to_global",
            "lifted local subgradients are global c-subgradients",
            self.tested,
            self.worst_defect,
            self.tolerance,
        )
        .with_config(serde_json::to_value(self).unwrap_or_default());
        r.pass = self.pass;
        r
    }
}

/// The local subdifferential of `u` in the chart at `x0` is the hull of the
/// projected active slopes; its extreme points, pairwise midpoints and
/// centroid are lifted by the c-exponential map and tested as supporting
/// slopes of `u` on `samples`.
pub fn local_to_global_check(
    body: &ConvexBody,
    potential: &SyntheticPotential,
    x0: &Vec3,
    samples: &[Vec3],
    spacing: f64,
) -> Result<LocalToGlobal> {
    let chart = TangentChart::at(body, x0)?;
    let n0 = chart.base().normal;
    let x0 = chart.base().x;
    let diam2 = body.diam().powi(2);
    let tol = 1e-12 * diam2;

    let mut slopes: Vec<Vec3> = potential.active(&x0, tol).into_iter().map(|k| potential.slopes[k]).collect();
    if potential.floor_active(&x0, tol) {
        slopes.push(x0);
    }
    for z in &slopes {
        let sp = body.normal_at(z)?;
        if sp.normal.dot(&n0) <= 0.0 {
            return Err(Error::HypothesisFailed("an active slope lies on the far side".into()));
        }
    }
    // Sampled subdifferential members must also stay on the near side.
    let far_member = samples.par_iter().any(|y| {
        body.normal_at(y).map(|p| p.normal.dot(&n0) <= 0.0).unwrap_or(false)
            && potential.support_defect(&x0, y, samples) <= tol
    });
    if far_member {
        return Err(Error::HypothesisFailed("sampled c-subdifferential reaches the far side".into()));
    }

    let local: Vec<_> = slopes.iter().map(|z| chart.project(z)).collect();
    let hull = ConvexPolygon::hull(&local).expect("at least one slope is active");
    let ext = hull.vertices.clone();
    let mut tests = ext.clone();
    for a in 0..ext.len() {
        for b in a + 1..ext.len() {
            tests.push((ext[a] + ext[b]) * 0.5);
        }
    }
    if ext.len() > 2 {
        tests.push(hull.centroid());
    }

    let mut recon: f64 = 0.0;
    for (p, z) in local.iter().zip(&slopes) {
        recon = recon.max((chart.exp(p)?.x - z).norm());
    }
    let mut worst = f64::NEG_INFINITY;
    for p in &tests {
        let xb = chart.exp(p)?.x;
        worst = worst.max(potential.support_defect(&x0, &xb, samples));
    }
    let tolerance = 1e-9 * diam2;
    Ok(LocalToGlobal {
        active: slopes.len(),
        extreme_points: ext.len(),
        tested: tests.len(),
        worst_defect: worst,
        reconstruction_error: recon,
        spacing,
        tolerance,
        pass: worst <= tolerance && recon <= 2.0 * spacing,
    })
}
