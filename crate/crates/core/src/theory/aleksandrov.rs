//! Lower and upper Aleksandrov-type estimates on sampled sections of
//! synthetic potentials.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::section::section_members;
use super::{assign_targets, ConvexPolygon, SectionSpec, SyntheticPotential, VerificationReport};
use crate::error::{Error, Result};
use crate::geometry::{cost, ConvexBody, TangentChart};
use crate::measures::{patch_sampling, SurfaceSampling};
use crate::Vec3;

/// How a vertex potential is kept from producing far-away section pieces.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Confinement {
    /// Add a piece whose slope is the opposite boundary point on the normal
    /// line; it dominates below depth `cut_depth` under the tangent plane.
    Lift { cut_depth: f64 },
    /// Max with the constant 0, keeping every subdifferential local.
    Floor,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexSectionParams {
    pub x_star: Vec3,
    /// Tangent distance of the slope points from `x_star`.
    pub slope_radius: f64,
    /// Angle of the first slope direction in the tangent frame.
    pub rotation: f64,
    /// Barycentric weights placing the section slope among the slopes.
    pub weights: Vec<f64>,
    /// Potential value at `x_star`.
    pub value: f64,
    /// Section height above the supporting function at `x_star`.
    pub height: f64,
    pub confinement: Confinement,
}

/// A potential with `n + 1` pieces meeting at `x_star`, whose
/// c-subdifferential there is a c-simplex, and an offset-form section
/// around it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexSection {
    pub params: VertexSectionParams,
    pub potential: SyntheticPotential,
    pub spec: SectionSpec,
    /// Tangent radius at `x_star` enclosing the section.
    pub radius: f64,
}

/// Build a vertex potential and its section.
pub fn vertex_section(body: &ConvexBody, params: &VertexSectionParams) -> Result<VertexSection> {
    let n = body.n();
    if params.weights.len() != n + 1 {
        return Err(Error::InvalidArgument(format!("need {} barycentric weights", n + 1)));
    }
    if params.weights.iter().any(|w| *w < 0.0) || (params.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("barycentric weights must be nonnegative and sum to 1".into()));
    }
    if !(params.slope_radius > 0.0 && params.height > 0.0) {
        return Err(Error::InvalidArgument("slope radius and height must be positive".into()));
    }
    let chart = TangentChart::at(body, &params.x_star)?;
    let xs = chart.base().x;
    let ns = chart.base().normal;
    let dirs: Vec<Vector2<f64>> = if n == 1 {
        vec![Vector2::new(1.0, 0.0), Vector2::new(-1.0, 0.0)]
    } else {
        (0..3)
            .map(|k| {
                let a = params.rotation + std::f64::consts::TAU * k as f64 / 3.0;
                Vector2::new(a.cos(), a.sin())
            })
            .collect()
    };
    let tangents: Vec<Vector2<f64>> = dirs.iter().map(|d| d * params.slope_radius).collect();
    let slopes = tangents.iter().map(|p| chart.exp(p).map(|s| s.x)).collect::<Result<Vec<_>>>()?;
    let pbar: Vector2<f64> = tangents.iter().zip(&params.weights).map(|(p, w)| p * *w).sum();
    let xb0 = chart.exp(&pbar)?.x;
    let mut potential = SyntheticPotential::through(&xs, params.value, slopes)?;
    let h_tilde = params.value + cost(&xs, &xb0) + params.height;
    match params.confinement {
        Confinement::Floor => {
            if params.value <= 0.0 {
                return Err(Error::InvalidArgument("floor confinement needs a positive vertex value".into()));
            }
            potential = potential.with_floor(0.0);
        }
        Confinement::Lift { cut_depth } => {
            let (lo, _) = body.line_interval(&xs, &ns).ok_or(Error::OutsideChartDomain)?;
            let far = xs + ns * lo;
            let m = cut_depth * (far - xb0).norm() - params.height;
            if m <= 0.0 {
                return Err(Error::InvalidArgument("cut depth too small for the section height".into()));
            }
            potential = potential.with_piece(far, params.value - m + cost(&xs, &far));
        }
    }
    let spec = SectionSpec::offset(xs, xb0, h_tilde);
    let radius = section_radius(&chart, &potential, &spec, params.slope_radius);
    Ok(VertexSection { params: params.clone(), potential, spec, radius })
}

/// Largest tangent distance from the chart base at which a ray leaves the
/// section, over 128 rays.
fn section_radius(chart: &TangentChart<'_>, u: &SyntheticPotential, spec: &SectionSpec, scale: f64) -> f64 {
    let n = chart.body().n();
    let rays = if n == 1 { 2 } else { 128 };
    let step = scale / 64.0;
    let limit = chart.body().diam();
    let inside = |p: &Vector2<f64>| match chart.exp(p) {
        Ok(s) => u.eval(&s.x) <= spec.m0(&s.x, 0.0),
        Err(_) => false,
    };
    let mut best: f64 = 0.0;
    for k in 0..rays {
        let a = std::f64::consts::TAU * k as f64 / rays as f64;
        let d = if n == 1 { Vector2::new(a.cos().signum(), 0.0) } else { Vector2::new(a.cos(), a.sin()) };
        let mut t = 0.0;
        while t < limit && inside(&(d * (t + step))) {
            t += step;
        }
        let (mut lo, mut hi) = (t, t + step);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if inside(&(d * mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.max(hi);
    }
    best
}

impl VertexSection {
    /// Sources: a fine patch over the section plus a coarse remainder.
    pub fn sources(&self, body: &ConvexBody, count: usize, coarse: usize, seed: u64) -> Result<SurfaceSampling> {
        Ok(patch_sampling(body, &self.params.x_star, 1.15 * self.radius, count, coarse, seed)?.0)
    }

    /// Targets: a fine patch over the slope simplex plus a coarse remainder.
    pub fn targets(&self, body: &ConvexBody, count: usize, coarse: usize, seed: u64) -> Result<SurfaceSampling> {
        Ok(patch_sampling(body, &self.params.x_star, 1.25 * self.params.slope_radius, count, coarse, seed ^ 0x77)?.0)
    }
}

/// Source positions and weights with the potential's vertices appended at
/// zero weight.
fn with_vertices(sources: &SurfaceSampling, u: &SyntheticPotential) -> (Vec<Vec3>, Vec<f64>) {
    let mut pts = sources.positions();
    let mut wts = sources.weights.clone();
    for v in &u.vertices {
        pts.push(*v);
        wts.push(0.0);
    }
    (pts, wts)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LowerAleksandrov {
    pub theta: f64,
    pub n: usize,
    /// `sup_S (m0 - u)`.
    pub sup: f64,
    pub area_subset: f64,
    pub area_image: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub section_count: usize,
    pub subset_count: usize,
    pub pass: bool,
}

impl LowerAleksandrov {
    pub fn report(&self) -> VerificationReport {
        VerificationReport::new(
            "lower_aleksandrov",
            "lower Aleksandrov estimate with constant theta/4",
            self.section_count,
            -self.margin,
            0.2 * self.rhs,
        )
        .with_config(serde_json::to_value(self).unwrap_or_default())
    }
}

/// Signed margin `sup_S (m0 - u)^n - (theta/4) H(A) H(du(A))`, with areas
/// from sample weights and the subdifferential image from the targets whose
/// optimal source lies in `A`.
///
/// `A` defaults to the section members whose projection lies in the half
/// dilation of the projected section. The three localisation hypotheses are
/// checked first.
#[allow(clippy::too_many_arguments)]
pub fn lower_aleksandrov_check(
    body: &ConvexBody,
    potential: &SyntheticPotential,
    spec: &SectionSpec,
    sources: &SurfaceSampling,
    targets: &SurfaceSampling,
    subset: Option<&[usize]>,
    theta: f64,
    conerad_half: f64,
) -> Result<LowerAleksandrov> {
    let n = body.n();
    let (pts, wts) = with_vertices(sources, potential);
    let u = potential.eval_all(&pts);
    let tol = 1e-12 * body.diam().powi(2);
    let members = section_members(&pts, &u, spec, 0.0, tol);
    if members.is_empty() {
        return Err(Error::InvalidArgument("empty section".into()));
    }
    let chart = TangentChart::at(body, &spec.xb0)?;
    let nb = chart.base().normal;
    for &i in &members {
        if body.normal_at(&pts[i])?.normal.dot(&nb) <= theta {
            return Err(Error::HypothesisFailed("section leaves the theta-side of the slope point".into()));
        }
    }
    let proj: Vec<Vector2<f64>> = members.iter().map(|&i| chart.project(&pts[i])).collect();
    let hull_s = ConvexPolygon::hull(&proj).expect("section is nonempty");
    let half = hull_s.dilate(0.5);
    let ptol = 1e-12 * body.diam();
    let subset: Vec<usize> = match subset {
        Some(a) => {
            for &i in a {
                if !members.contains(&i) {
                    return Err(Error::InvalidArgument("subset leaves the section".into()));
                }
                if !half.contains(&chart.project(&pts[i]), ptol) {
                    return Err(Error::InvalidArgument("subset leaves the half section".into()));
                }
            }
            a.to_vec()
        }
        None => members.iter().zip(&proj).filter(|(_, p)| half.contains(p, ptol)).map(|(&i, _)| i).collect(),
    };
    let cm = if subset.is_empty() {
        hull_s.centroid()
    } else {
        let pa: Vec<_> = subset.iter().map(|&i| chart.project(&pts[i])).collect();
        ConvexPolygon::hull(&pa).expect("subset is nonempty").centroid()
    };
    let x_cm = chart.exp(&cm)?;
    let ball = conerad_half / 4.0;
    if members.iter().any(|&i| (pts[i] - x_cm.x).norm() >= ball) {
        return Err(Error::HypothesisFailed("section leaves the ball about its center of mass".into()));
    }
    let ys = targets.positions();
    let owner = assign_targets(&u, &pts, &ys);
    let mut in_s = vec![false; pts.len()];
    members.iter().for_each(|&i| in_s[i] = true);
    let mut in_a = vec![false; pts.len()];
    subset.iter().for_each(|&i| in_a[i] = true);
    let mut area_image = 0.0;
    for (j, &i) in owner.iter().enumerate() {
        if in_s[i] && targets.points[j].normal.dot(&x_cm.normal) <= 0.0 {
            return Err(Error::HypothesisFailed("subdifferential of the section crosses sides".into()));
        }
        if in_a[i] {
            area_image += targets.weights[j];
        }
    }
    let area_subset: f64 = subset.iter().map(|&i| wts[i]).sum();
    let sup = members.iter().map(|&i| spec.m0(&pts[i], 0.0) - u[i]).fold(0.0, f64::max);
    let lhs = sup.powi(n as i32);
    let rhs = theta / 4.0 * area_subset * area_image;
    let margin = lhs - rhs;
    Ok(LowerAleksandrov {
        theta,
        n,
        sup,
        area_subset,
        area_image,
        lhs,
        rhs,
        margin,
        section_count: members.len(),
        subset_count: subset.len(),
        pass: margin >= -0.2 * rhs,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectionRatio {
    pub angle: f64,
    /// Longest chord of the projected section parallel to the direction.
    pub chord: f64,
    /// Distance from the projected base point to the supporting line.
    pub distance: f64,
    pub implied: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UpperAleksandrov {
    pub n: usize,
    /// `m0(x0) - u(x0)`.
    pub gap: f64,
    pub area_subdifferential: f64,
    pub area_section: f64,
    pub directions: Vec<DirectionRatio>,
    /// Largest implied constant over the directions.
    pub implied_constant: f64,
    pub section_count: usize,
}

impl UpperAleksandrov {
    pub fn report(&self) -> VerificationReport {
        let mut r = VerificationReport::new(
            "upper_aleksandrov",
            "upper Aleksandrov estimate, implied constant",
            self.section_count,
            0.0,
            0.0,
        )
        .with_constant(self.implied_constant)
        .with_config(serde_json::to_value(self).unwrap_or_default());
        if !self.implied_constant.is_finite() {
            r.pass = false;
        }
        r
    }
}

/// Implied constant `[l/d (m0 - u)(x0)^n] / [H(du(x0)) H(S)]` over
/// `directions` evenly spaced unit vectors in the tangent plane at the
/// section slope.
#[allow(clippy::too_many_arguments)]
pub fn upper_aleksandrov_check(
    body: &ConvexBody,
    potential: &SyntheticPotential,
    spec: &SectionSpec,
    x0: &Vec3,
    sources: &SurfaceSampling,
    targets: &SurfaceSampling,
    conerad_3536: f64,
    directions: usize,
) -> Result<UpperAleksandrov> {
    let n = body.n();
    let (mut pts, mut wts) = with_vertices(sources, potential);
    let i0 = match pts.iter().position(|p| (p - x0).norm() == 0.0) {
        Some(i) => i,
        None => {
            pts.push(*x0);
            wts.push(0.0);
            pts.len() - 1
        }
    };
    let u = potential.eval_all(&pts);
    let gap = spec.m0(x0, 0.0) - u[i0];
    if !(gap > 0.0) {
        return Err(Error::InvalidArgument("base point must lie strictly inside the section".into()));
    }
    let r = conerad_3536 / 8.0;
    match potential.subdifferential_radius() {
        Some(rad) if rad < r => {}
        _ => return Err(Error::HypothesisFailed("c-subdifferentials are not confined to the conerad/8 ball".into())),
    }
    let tol = 1e-12 * body.diam().powi(2);
    let members = section_members(&pts, &u, spec, 0.0, tol);
    if members.iter().any(|&i| (pts[i] - spec.xb0).norm() >= r) {
        return Err(Error::HypothesisFailed("section leaves the conerad/8 ball about its slope".into()));
    }
    let ys = targets.positions();
    let owner = assign_targets(&u, &pts, &ys);
    let mut in_s = vec![false; pts.len()];
    members.iter().for_each(|&i| in_s[i] = true);
    let mut area_subdifferential = 0.0;
    for (j, &i) in owner.iter().enumerate() {
        if in_s[i] && (pts[i] - ys[j]).norm() >= r {
            return Err(Error::HypothesisFailed("sampled c-subdifferential leaves the conerad/8 ball".into()));
        }
        if i == i0 {
            area_subdifferential += targets.weights[j];
        }
    }
    if area_subdifferential <= 0.0 {
        return Err(Error::DegenerateSubdifferential);
    }
    let area_section: f64 = members.iter().map(|&i| wts[i]).sum();
    let chart = TangentChart::at(body, &spec.xb0)?;
    let proj: Vec<Vector2<f64>> = members.iter().map(|&i| chart.project(&pts[i])).collect();
    let hull = ConvexPolygon::hull(&proj).expect("section contains the base point");
    let p0 = chart.project(x0);
    let count = if n == 1 { 2 } else { directions.max(1) };
    let scale = gap.powi(n as i32) / (area_subdifferential * area_section);
    let dirs: Vec<DirectionRatio> = (0..count)
        .map(|k| {
            let angle =
                if n == 1 { std::f64::consts::PI * k as f64 } else { std::f64::consts::TAU * k as f64 / count as f64 };
            let w = Vector2::new(angle.cos(), if n == 1 { 0.0 } else { angle.sin() });
            let chord = hull.chord_length(&w);
            let distance = hull.support(&w) - p0.dot(&w);
            let implied = if distance > 0.0 { chord / distance * scale } else { f64::INFINITY };
            DirectionRatio { angle, chord, distance, implied }
        })
        .collect();
    let implied_constant = dirs.iter().map(|d| d.implied).fold(0.0, f64::max);
    Ok(UpperAleksandrov {
        n,
        gap,
        area_subdifferential,
        area_section,
        directions: dirs,
        implied_constant,
        section_count: members.len(),
    })
}
