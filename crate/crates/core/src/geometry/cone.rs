//! Sampled modulus of continuity of the normal map and the cone radius.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chart::tangent_frame;
use super::{ConvexBody, TangentChart};
use crate::error::{Error, Result};
use crate::measures::sample_surface;
use crate::Vec3;

/// Shrink factor applied to the sampled cone radius before it enters any
/// threshold; sampling underestimates the modulus and so overestimates the
/// radius.
pub const CONERAD_SAFETY: f64 = 0.95;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeParams {
    pub theta: f64,
    /// Largest sampled radius whose modulus stays below `sqrt(2 - 2 theta)`.
    pub conerad: f64,
    /// `conerad` times [`CONERAD_SAFETY`].
    pub conerad_safe: f64,
    /// Sampled modulus table `(r, omega(r))`.
    pub modulus: Vec<(f64, f64)>,
    pub pairs: usize,
    /// Violations found by the post-hoc random pair test.
    pub posthoc_violations: usize,
    pub warning: String,
}

/// Estimate `conerad(theta)` from all pairs of a boundary sampling plus
/// random short-range pairs. `budget` is the number of boundary samples.
pub fn conerad(body: &ConvexBody, theta: f64, budget: usize, seed: u64) -> Result<ConeParams> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("theta {theta} outside (0, 1)")));
    }
    if !body.is_c1() {
        return Err(Error::NotC1);
    }
    let pairs = sampled_pairs(body, budget, seed)?;
    let threshold = (2.0 - 2.0 * theta).sqrt();
    let mut first_bad = f64::INFINITY;
    for &(d, w) in &pairs {
        if w >= threshold && d < first_bad {
            first_bad = d;
        }
    }
    let radius = if first_bad.is_finite() { first_bad } else { body.diam() };

    // Step table of the running maximum.
    let mut sorted = pairs.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut table = Vec::new();
    let mut running: f64 = 0.0;
    let stride = (sorted.len() / 64).max(1);
    for (k, &(d, w)) in sorted.iter().enumerate() {
        running = running.max(w);
        if k % stride == 0 || k + 1 == sorted.len() {
            table.push((d, running));
        }
    }

    let posthoc_violations = posthoc(body, theta, radius, seed ^ 0x9e37_79b9)?;
    Ok(ConeParams {
        theta,
        conerad: radius,
        conerad_safe: radius * CONERAD_SAFETY,
        modulus: table,
        pairs: pairs.len(),
        posthoc_violations,
        warning: "sampled modulus is a lower bound; conerad may be overestimated".into(),
    })
}

/// `(|X1 - X2|, |N1 - N2|)` over all pairs of a sampling and random nearby
/// pairs at log-spaced scales.
fn sampled_pairs(body: &ConvexBody, budget: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let s = sample_surface(body, budget.max(32), seed)?;
    let pts = &s.points;
    let mut out = Vec::with_capacity(pts.len() * pts.len() / 2 + pts.len() * 8);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            out.push(((pts[i].x - pts[j].x).norm(), (pts[i].normal - pts[j].normal).norm()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151);
    let diam = body.diam();
    for p in pts {
        let chart = match TangentChart::from_point(body, *p) {
            Ok(c) => c,
            Err(_) => continue,
        };
        for _ in 0..8 {
            let r = diam * 10f64.powf(rng.gen_range(-3.0..-0.5));
            let v = random_tangent(body.n(), &mut rng) * r;
            if let Ok(q) = chart.exp(&v) {
                out.push(((q.x - p.x).norm(), (q.normal - p.normal).norm()));
            }
        }
    }
    Ok(out)
}

fn random_tangent(n: usize, rng: &mut ChaCha8Rng) -> Vector2<f64> {
    if n == 1 {
        Vector2::new(if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0)
    } else {
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        Vector2::new(a.cos(), a.sin())
    }
}

/// Random pairs closer than `radius` whose normals fail the inner-product
/// bound.
fn posthoc(body: &ConvexBody, theta: f64, radius: f64, seed: u64) -> Result<usize> {
    let s = sample_surface(body, 256, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    let mut done = 0;
    let mut tries = 0;
    while done < 1000 && tries < 20000 {
        tries += 1;
        let p = s.points[rng.gen_range(0..s.points.len())];
        let chart = match TangentChart::from_point(body, p) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let v = random_tangent(body.n(), &mut rng) * (radius * rng.gen::<f64>());
        let q = match chart.exp(&v) {
            Ok(q) => q,
            Err(_) => continue,
        };
        if (q.x - p.x).norm() >= radius {
            continue;
        }
        done += 1;
        if q.normal.dot(&p.normal) <= theta {
            bad += 1;
        }
    }
    Ok(bad)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeCheck {
    pub pass: bool,
    /// Largest level-function value over the sampled cone points; positive
    /// values leave the body.
    pub worst_margin: f64,
    pub samples: usize,
}

/// Sample the truncated interior cone at `x0` and test membership.
pub fn cone_inclusion_check(
    body: &ConvexBody,
    x0: &Vec3,
    params: &ConeParams,
    samples: usize,
    seed: u64,
) -> Result<ConeCheck> {
    if !body.is_c1() {
        return Err(Error::NotC1);
    }
    let base = body.normal_at(x0)?;
    if !base.unique_normal {
        return Err(Error::NonUniqueNormal);
    }
    let theta = params.theta;
    let max_angle = (1.0 - theta * theta).sqrt().acos();
    let (e1, e2) = tangent_frame(body.n(), &base.normal);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..samples {
        let alpha = max_angle * rng.gen::<f64>();
        let t = if body.n() == 1 {
            e1 * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
        } else {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            e1 * a.cos() + e2 * a.sin()
        };
        let dir = -base.normal * alpha.cos() + t * alpha.sin();
        let r = if k == 0 { params.conerad_safe } else { params.conerad_safe * rng.gen::<f64>() };
        let x = base.x + dir * r;
        worst = worst.max(body.level(&x));
    }
    Ok(ConeCheck { pass: worst <= 1e-8 * body.diam(), worst_margin: worst, samples })
}
