//! Sections of potentials, their localisation, and c-cones.

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConvexPolygon, VerificationReport};
use crate::error::{Error, Result};
use crate::geometry::{cost, ConvexBody, TangentChart};
use crate::Vec3;

/// Section `{X : u(X) <= m0(X)}` with `m0(X) = -c(X, xb0) + level`.
///
/// In height form `level = c(x0, xb0) + u(x0) + h`; in offset form the level
/// is `h_tilde` and `x0` only serves as a reference point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionSpec {
    pub x0: Vec3,
    pub xb0: Vec3,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_tilde: Option<f64>,
}

impl SectionSpec {
    pub fn height(x0: Vec3, xb0: Vec3, h: f64) -> Result<Self> {
        if !(h >= 0.0) {
            return Err(Error::InvalidArgument(format!("section height {h} is negative")));
        }
        Ok(Self { x0, xb0, h, h_tilde: None })
    }

    pub fn offset(x0: Vec3, xb0: Vec3, h_tilde: f64) -> Self {
        Self { x0, xb0, h: 0.0, h_tilde: Some(h_tilde) }
    }

    /// Constant part of `m0` given `u(x0)`.
    pub fn level(&self, u_x0: f64) -> f64 {
        self.h_tilde.unwrap_or_else(|| cost(&self.x0, &self.xb0) + u_x0 + self.h)
    }

    pub fn m0(&self, x: &Vec3, u_x0: f64) -> f64 {
        -cost(x, &self.xb0) + self.level(u_x0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Section {
    /// Indices of the sample points in the section.
    pub members: Vec<usize>,
    pub level: f64,
    /// Whether every member lies on the same side as the slope point.
    pub same_side: bool,
    /// Tangent coordinates at the slope point; empty when `same_side` fails.
    pub projected: Vec<Vector2<f64>>,
    pub hull: Option<ConvexPolygon>,
    /// Largest distance from a point of the projected hull to the nearest
    /// projected member.
    pub convexity_defect: Option<f64>,
    pub spacing: f64,
}

impl Section {
    pub fn require_same_side(&self) -> Result<()> {
        if self.same_side {
            Ok(())
        } else {
            Err(Error::SectionCrossesSide)
        }
    }

    pub fn report(&self) -> VerificationReport {
        let defect = self.convexity_defect.unwrap_or(f64::INFINITY);
        let mut r = VerificationReport::new(
            "section_convexity",
            "projected sections are convex",
            self.members.len(),
            defect,
            2.0 * self.spacing,
        )
        .with_config(serde_json::json!({ "level": self.level, "same_side": self.same_side }));
        if !self.same_side {
            r = r.note("section crosses to the far side of its slope point");
        }
        r
    }
}

pub(crate) fn section_members(points: &[Vec3], values: &[f64], spec: &SectionSpec, u_x0: f64, tol: f64) -> Vec<usize> {
    (0..points.len()).filter(|&i| values[i] <= spec.m0(&points[i], u_x0) + tol).collect()
}

/// Extract the section on a sampled potential and measure how far its
/// tangent projection at the slope point is from convex.
pub fn section_extract(
    body: &ConvexBody,
    points: &[Vec3],
    values: &[f64],
    u_x0: f64,
    spec: &SectionSpec,
    spacing: f64,
) -> Result<Section> {
    if points.len() != values.len() {
        return Err(Error::InvalidArgument("points and values differ in length".into()));
    }
    let tol = 1e-12 * body.diam().powi(2);
    let members = section_members(points, values, spec, u_x0, tol);
    let chart = TangentChart::at(body, &spec.xb0)?;
    let nb = chart.base().normal;
    let same_side =
        members.iter().all(|&i| body.normal_at(&points[i]).map(|p| p.normal.dot(&nb) > 0.0).unwrap_or(false));
    let level = spec.level(u_x0);
    if !same_side || members.is_empty() {
        return Ok(Section {
            members,
            level,
            same_side,
            projected: Vec::new(),
            hull: None,
            convexity_defect: None,
            spacing,
        });
    }
    let projected: Vec<Vector2<f64>> = members.iter().map(|&i| chart.project(&points[i])).collect();
    let hull = ConvexPolygon::hull(&projected);
    let defect = hull.as_ref().map(|h| convexity_defect(h, &projected, spacing, body.n()));
    Ok(Section { members, level, same_side, projected, hull, convexity_defect: defect, spacing })
}

fn convexity_defect(hull: &ConvexPolygon, pts: &[Vector2<f64>], spacing: f64, n: usize) -> f64 {
    if n == 1 || hull.is_segment() {
        let mut xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        xs.sort_by(f64::total_cmp);
        return xs.windows(2).map(|w| 0.5 * (w[1] - w[0])).fold(0.0, f64::max);
    }
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mut step = 0.5 * spacing.max(1e-12);
    let area = hull.area().max(0.0);
    if area / (step * step) > 40_000.0 {
        step = (area / 40_000.0).sqrt();
    }
    let nx = ((hi.x - lo.x) / step).ceil() as usize + 1;
    let ny = ((hi.y - lo.y) / step).ceil() as usize + 1;
    let grid: Vec<Vector2<f64>> = (0..nx * ny)
        .map(|k| lo + Vector2::new((k % nx) as f64 * step, (k / nx) as f64 * step))
        .filter(|p| hull.contains(p, 0.0))
        .collect();
    grid.par_iter()
        .map(|g| pts.iter().map(|p| (p - g).norm_squared()).fold(f64::INFINITY, f64::min).sqrt())
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionLocality {
    pub eta: f64,
    /// `(h, contained)` over the scanned heights in increasing order.
    pub scan: Vec<(f64, bool)>,
    /// Largest scanned height below which every section is contained.
    pub h_star: Option<f64>,
    pub pass: bool,
}

impl SectionLocality {
    pub fn report(&self) -> VerificationReport {
        let worst = if self.pass { 0.0 } else { 1.0 };
        let mut r = VerificationReport::new(
            "section_locality",
            "small sections stay near their slope point",
            self.scan.len(),
            worst,
            0.0,
        )
        .with_config(serde_json::to_value(self).unwrap_or_default());
        if let Some(h) = self.h_star {
            r = r.with_constant(h);
        }
        r
    }
}

/// Scan section heights and find the largest `h` below which every section
/// at `(x0, xb0)` lies in the ball of radius `eta` about `xb0`. Passes when
/// the smallest scanned height is contained.
#[allow(clippy::too_many_arguments)]
pub fn section_locality_check(
    body: &ConvexBody,
    points: &[Vec3],
    values: &[f64],
    u_x0: f64,
    x0: &Vec3,
    xb0: &Vec3,
    eta: f64,
    heights: &[f64],
) -> Result<SectionLocality> {
    if points.len() != values.len() {
        return Err(Error::InvalidArgument("points and values differ in length".into()));
    }
    let mut hs = heights.to_vec();
    hs.sort_by(f64::total_cmp);
    let tol = 1e-12 * body.diam().powi(2);
    let base_in = (x0 - xb0).norm() < eta;
    let mut scan = Vec::with_capacity(hs.len());
    let mut h_star = None;
    let mut prefix = true;
    for &h in &hs {
        let spec = SectionSpec::height(*x0, *xb0, h)?;
        let members = section_members(points, values, &spec, u_x0, tol);
        let ok = base_in && members.iter().all(|&i| (points[i] - xb0).norm() < eta);
        scan.push((h, ok));
        prefix &= ok;
        if prefix {
            h_star = Some(h);
        }
    }
    let pass = scan.first().map(|s| s.1).unwrap_or(false);
    Ok(SectionLocality { eta, scan, h_star, pass })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CCone {
    /// Cone values at the evaluation points.
    pub values: Vec<f64>,
    /// Candidate slopes whose c-affine function stays below `m0` on the
    /// section.
    pub admissible: Vec<usize>,
}

/// c-cone with base the sampled section and vertex `x0`: the largest
/// admissible c-affine function through `(x0, u(x0))`, evaluated at
/// `eval_points`.
pub fn c_cone_eval(
    section_points: &[Vec3],
    x0: &Vec3,
    u_x0: f64,
    spec: &SectionSpec,
    candidates: &[Vec3],
    eval_points: &[Vec3],
) -> Result<CCone> {
    let scale = section_points.iter().chain(candidates).map(|p| p.norm_squared()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let affine = |x: &Vec3, xb: &Vec3| -cost(x, xb) + cost(x0, xb) + u_x0;
    let admissible: Vec<usize> = (0..candidates.len())
        .into_par_iter()
        .filter(|&k| section_points.iter().all(|y| affine(y, &candidates[k]) <= spec.m0(y, u_x0) + tol))
        .collect();
    if admissible.is_empty() {
        return Err(Error::NoAdmissibleSlope);
    }
    let values = eval_points
        .par_iter()
        .map(|x| admissible.iter().map(|&k| affine(x, &candidates[k])).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(CCone { values, admissible })
}
