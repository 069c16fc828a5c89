//! Ball hulls: intersection of all balls of a fixed radius that contain a body.
//!
//! Centers of containing balls form the convex set
//! `C = { c : <c, v> >= h(v) - R for all unit v }`. It is cut out on a
//! direction grid, and since `|x - c|` is convex in `c` the hull is the
//! intersection of the balls centred at the vertices of `C`. Each vertex is
//! pulled towards the origin until its ball contains the body, so the output
//! always contains the input.

use std::collections::HashSet;

use super::shape::Shape;
use super::{direction_grid, ConvexBody, ShapeSpec};
use crate::error::{Error, Result};
use crate::Vec3;

/// Ball hull of `body` with radius `radius` on the default direction grid.
pub fn ball_hull(body: &ConvexBody, radius: f64) -> Result<ConvexBody> {
    ball_hull_with(body, radius, 0)
}

pub(crate) fn ball_hull_with(body: &ConvexBody, radius: f64, directions: usize) -> Result<ConvexBody> {
    if radius < 0.5 * body.diam() {
        return Err(Error::RadiusTooSmall { radius, min: 0.5 * body.diam() });
    }
    let spec = ShapeSpec::BallHull {
        base: Box::new(body.spec().clone()),
        radius,
        directions: (directions > 0).then_some(directions),
    };
    if let Shape::Ball { c, r } = &body.shape {
        if *r <= radius {
            return Ok(ConvexBody::from_parts(
                body.n(),
                Shape::Ball { c: *c, r: *r },
                spec,
                body.diam(),
                body.inradius(),
                body.outradius(),
            ));
        }
    }
    if radius < body.outradius() {
        return Err(Error::InvalidArgument(format!(
            "hull radius {radius} must be at least the outradius {}",
            body.outradius()
        )));
    }
    let n = body.n();
    let m = if directions > 0 {
        directions
    } else if n == 1 {
        4096
    } else {
        2000
    };
    let dirs = direction_grid(n, m);
    let vertices = if n == 1 { planar_centers(body, radius, &dirs) } else { spatial_centers(body, radius, &dirs)? };
    if vertices.is_empty() {
        return Err(Error::RadiusTooSmall { radius, min: 0.5 * body.diam() });
    }
    let centers: Vec<Vec3> = vertices.iter().map(|c| pull_back(body, radius, *c)).collect();
    let shape = Shape::Hull { centers, r: radius };
    let probe = ConvexBody::from_parts(n, shape.clone(), spec.clone(), body.diam(), body.inradius(), body.outradius());
    let grid = direction_grid(n, if n == 1 { 2048 } else { 4000 });
    let pts: Vec<Vec3> = grid.iter().map(|w| probe.boundary_point(w).x).collect();
    let radii: Vec<f64> = pts.iter().map(|p| p.norm()).collect();
    let inr = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let outr = radii.iter().cloned().fold(0.0, f64::max);
    let mut diam: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            diam = diam.max((p - q).norm());
        }
    }
    Ok(ConvexBody::from_parts(n, shape, spec, diam.max(body.diam()), inr, outr))
}

/// Move `c` towards the origin until `B_radius(c)` contains the body.
fn pull_back(body: &ConvexBody, radius: f64, c: Vec3) -> Vec3 {
    if body.farthest(&c) <= radius {
        return c;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if body.farthest(&(c * mid)) <= radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    c * lo
}

fn planar_centers(body: &ConvexBody, radius: f64, dirs: &[Vec3]) -> Vec<Vec3> {
    let big = 4.0 * (radius + body.outradius());
    let mut poly = vec![
        Vec3::new(-big, -big, 0.0),
        Vec3::new(big, -big, 0.0),
        Vec3::new(big, big, 0.0),
        Vec3::new(-big, big, 0.0),
    ];
    for v in dirs {
        let b = body.support(v) - radius;
        poly = clip_halfplane(&poly, v, b);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Keep the part of a convex polygon with `<p, v> >= b`.
fn clip_halfplane(poly: &[Vec3], v: &Vec3, b: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let fp = p.dot(v) - b;
        let fq = q.dot(v) - b;
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

/// Vertices of the center polytope via the facets of its polar point set.
fn spatial_centers(body: &ConvexBody, radius: f64, dirs: &[Vec3]) -> Result<Vec<Vec3>> {
    let mut pts = Vec::with_capacity(dirs.len());
    for v in dirs {
        let slack = radius - body.support(v);
        if slack <= 0.0 {
            return Err(Error::RadiusTooSmall { radius, min: 0.5 * body.diam() });
        }
        pts.push(-v / slack);
    }
    let faces = convex_hull_3d(&pts);
    let mut out: Vec<Vec3> = Vec::new();
    let mut seen = HashSet::new();
    for f in faces {
        let (a, b, c) = (pts[f[0]], pts[f[1]], pts[f[2]]);
        let nrm = (b - a).cross(&(c - a));
        let d = nrm.dot(&a);
        if d <= 0.0 {
            continue;
        }
        let vert = nrm / d;
        let key = ((vert.x * 1e9).round() as i64, (vert.y * 1e9).round() as i64, (vert.z * 1e9).round() as i64);
        if seen.insert(key) {
            out.push(vert);
        }
    }
    Ok(out)
}

/// Incremental convex hull of points in general position; returns
/// outward-oriented triangles.
pub(crate) fn convex_hull_3d(pts: &[Vec3]) -> Vec<[usize; 3]> {
    let n = pts.len();
    if n < 4 {
        return Vec::new();
    }
    let scale = pts.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1e-300);
    let eps = 1e-12 * scale;
    // Initial tetrahedron from extreme points.
    let i0 = 0;
    let i1 = (0..n).max_by(|&a, &b| (pts[a] - pts[i0]).norm().total_cmp(&(pts[b] - pts[i0]).norm())).unwrap();
    let line = pts[i1] - pts[i0];
    let i2 = (0..n)
        .max_by(|&a, &b| line.cross(&(pts[a] - pts[i0])).norm().total_cmp(&line.cross(&(pts[b] - pts[i0])).norm()))
        .unwrap();
    let pn = line.cross(&(pts[i2] - pts[i0]));
    let i3 = (0..n)
        .max_by(|&a, &b| pn.dot(&(pts[a] - pts[i0])).abs().total_cmp(&pn.dot(&(pts[b] - pts[i0])).abs()))
        .unwrap();
    if pn.dot(&(pts[i3] - pts[i0])).abs() <= eps * scale * scale {
        return Vec::new();
    }
    let centroid = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let orient = |f: [usize; 3]| -> [usize; 3] {
        let nrm = (pts[f[1]] - pts[f[0]]).cross(&(pts[f[2]] - pts[f[0]]));
        if nrm.dot(&(pts[f[0]] - centroid)) < 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    };
    for f in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        faces.push(orient(f));
    }
    let used: HashSet<usize> = [i0, i1, i2, i3].into_iter().collect();
    for p in 0..n {
        if used.contains(&p) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| {
                let nrm = (pts[f[1]] - pts[f[0]]).cross(&(pts[f[2]] - pts[f[0]]));
                let nn = nrm.norm();
                nn > 0.0 && nrm.dot(&(pts[p] - pts[f[0]])) / nn > eps
            })
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, v)| **v) {
            for k in 0..3 {
                edges.insert((f[k], f[(k + 1) % 3]));
            }
        }
        let mut next = Vec::with_capacity(faces.len() + 4);
        for (f, v) in faces.iter().zip(&visible) {
            if !*v {
                next.push(*f);
            }
        }
        for &(a, b) in &edges {
            if !edges.contains(&(b, a)) {
                next.push([a, b, p]);
            }
        }
        faces = next;
    }
    faces
}
