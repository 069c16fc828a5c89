//! Quasi-uniform boundary samplings with area weights.

use std::f64::consts::PI;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{direction_grid, knn, tangent_frame, ConvexBody, SurfacePoint, TangentChart};
use crate::Vec3;

/// Boundary points with positive area weights (arc-length weights for
/// planar bodies).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceSampling {
    pub n: usize,
    pub points: Vec<SurfacePoint>,
    pub weights: Vec<f64>,
    pub seed: u64,
    spacing: f64,
}

impl SurfaceSampling {
    /// Wrap precomputed points and weights.
    pub fn from_parts(n: usize, points: Vec<SurfacePoint>, weights: Vec<f64>, seed: u64) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument("points and weights differ in length".into()));
        }
        if points.len() < 2 {
            return Err(Error::InsufficientSamples("need at least two points".into()));
        }
        let pos: Vec<Vec3> = points.iter().map(|p| p.x).collect();
        let nn = knn(&pos, 1);
        let spacing = nn.iter().enumerate().map(|(i, l)| (pos[i] - pos[l[0]]).norm()).sum::<f64>() / pos.len() as f64;
        Ok(Self { n, points, weights, seed, spacing })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| p.x).collect()
    }

    /// Estimated surface area.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mean nearest-neighbour distance.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// Area element of the radial parametrisation at direction `w`.
fn radial_jacobian(body: &ConvexBody, w: &Vec3) -> (SurfacePoint, f64) {
    let p = body.boundary_point(w);
    let r = p.x.norm();
    let cos = p.normal.dot(w).max(1e-3);
    (p, r.powi(body.n() as i32) / cos)
}

fn random_direction(n: usize, rng: &mut ChaCha8Rng) -> Vec3 {
    if n == 1 {
        let t: f64 = rng.gen_range(0.0..2.0 * PI);
        Vec3::new(t.cos(), t.sin(), 0.0)
    } else {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let t: f64 = rng.gen_range(0.0..2.0 * PI);
        let s = (1.0 - z * z).sqrt();
        Vec3::new(s * t.cos(), s * t.sin(), z)
    }
}

/// `count` boundary points weighted by local cell areas. Curves get equal
/// arc-length steps from a random start; surfaces get area-uniform random
/// candidates thinned by farthest-point selection.
pub fn sample_surface(body: &ConvexBody, count: usize, seed: u64) -> Result<SurfaceSampling> {
    if count < 16 {
        return Err(Error::InsufficientSamples(format!("{count} < 16 points requested")));
    }
    let n = body.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n == 1 {
        let points = arc_length_points(body, count, rng.gen());
        let weights = area_weights(n, &points);
        return SurfaceSampling::from_parts(n, points, weights, seed);
    }
    let jmax = direction_grid(n, 2000).iter().map(|w| radial_jacobian(body, w).1).fold(0.0, f64::max) * 1.25;
    let want = count * if n == 1 { 6 } else { 8 };
    let mut cand: Vec<SurfacePoint> = Vec::with_capacity(want);
    while cand.len() < want {
        let w = random_direction(n, &mut rng);
        let (p, j) = radial_jacobian(body, &w);
        if rng.gen::<f64>() * jmax < j {
            cand.push(p);
        }
    }
    let chosen = farthest_points(&cand, count);
    let points: Vec<SurfacePoint> = chosen.into_iter().map(|i| cand[i]).collect();
    let weights = area_weights(n, &points);
    SurfaceSampling::from_parts(n, points, weights, seed)
}

/// Equal arc-length steps along a closed curve, starting a random fraction
/// `offset` of a step past angle zero.
fn arc_length_points(body: &ConvexBody, count: usize, offset: f64) -> Vec<SurfacePoint> {
    let fine = 64 * count;
    let pts: Vec<SurfacePoint> = (0..=fine)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / fine as f64;
            body.boundary_point(&Vec3::new(t.cos(), t.sin(), 0.0))
        })
        .collect();
    let mut cum = vec![0.0; fine + 1];
    for k in 1..=fine {
        cum[k] = cum[k - 1] + (pts[k].x - pts[k - 1].x).norm();
    }
    let step = cum[fine] / count as f64;
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for i in 0..count {
        let s = (i as f64 + offset) * step;
        while seg + 1 < fine && cum[seg + 1] < s {
            seg += 1;
        }
        let f = ((s - cum[seg]) / (cum[seg + 1] - cum[seg])).clamp(0.0, 1.0);
        let t = 2.0 * PI * (seg as f64 + f) / fine as f64;
        out.push(body.boundary_point(&Vec3::new(t.cos(), t.sin(), 0.0)));
    }
    out
}

/// Greedy farthest-point subset of size `count`, starting at index 0.
fn farthest_points(cand: &[SurfacePoint], count: usize) -> Vec<usize> {
    let mut dist = vec![f64::INFINITY; cand.len()];
    let mut out = Vec::with_capacity(count);
    let mut cur = 0;
    for _ in 0..count {
        out.push(cur);
        let x = cand[cur].x;
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, c) in cand.iter().enumerate() {
            let d = (c.x - x).norm_squared();
            if d < dist[k] {
                dist[k] = d;
            }
            if dist[k] > best.0 {
                best = (dist[k], k);
            }
        }
        cur = best.1;
    }
    out
}

/// Local area shares: half the neighbouring chords for curves, tangent-plane
/// Voronoi cells for surfaces.
pub(crate) fn area_weights(n: usize, points: &[SurfacePoint]) -> Vec<f64> {
    if n == 1 {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| {
            let ta = points[a].x.y.atan2(points[a].x.x);
            let tb = points[b].x.y.atan2(points[b].x.x);
            ta.total_cmp(&tb)
        });
        let m = idx.len();
        let mut w = vec![0.0; m];
        for k in 0..m {
            let (a, b) = (idx[k], idx[(k + 1) % m]);
            let half = 0.5 * (points[a].x - points[b].x).norm();
            w[a] += half;
            w[b] += half;
        }
        return w;
    }
    let pos: Vec<Vec3> = points.iter().map(|p| p.x).collect();
    let nn = knn(&pos, 16);
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (e1, e2) = tangent_frame(2, &p.normal);
            let qs: Vec<Vector2<f64>> = nn[i]
                .iter()
                .map(|&j| {
                    let d = unfold(&(pos[j] - p.x), &p.normal, &points[j].normal);
                    let q = Vector2::new(d.dot(&e1), d.dot(&e2));
                    let len = q.norm();
                    if len > 0.0 {
                        q * (d.norm() / len)
                    } else {
                        q
                    }
                })
                .collect();
            voronoi_cell_area(&qs)
        })
        .collect()
}

/// Offset `d` seen from a point with normal `ni`: projected onto the plane
/// of the mean normal and rotated into the plane of `ni`, so neighbours
/// across a crease land on the far side instead of folding back.
fn unfold(d: &Vec3, ni: &Vec3, nj: &Vec3) -> Vec3 {
    let m = ni + nj;
    let len = m.norm();
    if len < 1e-6 {
        return *d;
    }
    let m = m / len;
    let t = d - m * d.dot(&m);
    let c = m.dot(ni);
    let k = m.cross(ni);
    t * c + k.cross(&t) + k * (k.dot(&t) / (1.0 + c))
}

/// Area of the planar Voronoi cell of the origin against `sites`.
pub(crate) fn voronoi_cell_area(sites: &[Vector2<f64>]) -> f64 {
    let big = 2.0 * sites.iter().map(|q| q.norm()).fold(0.0, f64::max);
    let mut poly =
        vec![Vector2::new(-big, -big), Vector2::new(big, -big), Vector2::new(big, big), Vector2::new(-big, big)];
    for q in sites {
        let b = 0.5 * q.norm_squared();
        if b == 0.0 {
            continue;
        }
        let mut next = Vec::with_capacity(poly.len() + 1);
        for k in 0..poly.len() {
            let a = poly[k];
            let c = poly[(k + 1) % poly.len()];
            let fa = b - a.dot(q);
            let fc = b - c.dot(q);
            if fa >= 0.0 {
                next.push(a);
            }
            if (fa >= 0.0) != (fc >= 0.0) {
                next.push(a + (c - a) * (fa / (fa - fc)));
            }
        }
        poly = next;
        if poly.is_empty() {
            return 0.0;
        }
    }
    let mut area = 0.0;
    for k in 0..poly.len() {
        let a = poly[k];
        let c = poly[(k + 1) % poly.len()];
        area += a.x * c.y - a.y * c.x;
    }
    0.5 * area.abs()
}

/// Fine sampling of a tangent disc of radius `radius` at `x0`, lifted to the
/// boundary, plus a coarse sampling of the rest of the boundary.
///
/// Patch points come first in the returned order; `patch_len` of the result
/// tells how many.
pub fn patch_sampling(
    body: &ConvexBody,
    x0: &Vec3,
    radius: f64,
    patch_count: usize,
    coarse_count: usize,
    seed: u64,
) -> Result<(SurfaceSampling, usize)> {
    let chart = TangentChart::at(body, x0)?;
    let n = body.n();
    let golden = PI * (3.0 - 5f64.sqrt());
    let step = 1e-6 * body.diam();
    let mut points = Vec::with_capacity(patch_count + coarse_count);
    let mut weights = Vec::with_capacity(patch_count + coarse_count);
    for k in 0..patch_count {
        let s = (k as f64 + 0.5) / patch_count as f64;
        let p = if n == 1 {
            Vector2::new(radius * (2.0 * s - 1.0), 0.0)
        } else {
            let a = golden * k as f64;
            Vector2::new(a.cos(), a.sin()) * (radius * s.sqrt())
        };
        let sp = chart.exp(&p)?;
        let g = chart.beta_gradient(&p, step).ok_or(Error::OutsideChartDomain)?;
        let cell = if n == 1 { 2.0 * radius } else { PI * radius * radius } / patch_count as f64;
        points.push(sp);
        weights.push(cell * (1.0 + g.norm_squared()).sqrt());
    }
    let coarse = sample_surface(body, coarse_count, seed)?;
    let margin = radius + 0.5 * coarse.spacing();
    let n0 = chart.base().normal;
    for (p, w) in coarse.points.iter().zip(&coarse.weights) {
        if p.normal.dot(&n0) <= 0.0 || chart.project(&p.x).norm() > margin {
            points.push(*p);
            weights.push(*w);
        }
    }
    Ok((SurfaceSampling::from_parts(n, points, weights, seed)?, patch_count))
}
