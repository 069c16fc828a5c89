//! Convex hulls of projected point sets in a tangent plane.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

type P2 = Vector2<f64>;

/// Convex polygon with counter-clockwise vertices. Point sets on a line
/// (planar bodies) give a two-vertex segment whose area is its length.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<P2>,
}

fn cross(o: &P2, a: &P2, b: &P2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

impl ConvexPolygon {
    /// Monotone-chain hull. Returns `None` for an empty input.
    pub fn hull(points: &[P2]) -> Option<Self> {
        if points.is_empty() {
            return None;
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup_by(|a, b| (*a - *b).norm() == 0.0);
        if pts.len() < 3 {
            return Some(Self { vertices: pts });
        }
        let scale = pts.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1e-300);
        let eps = 1e-14 * scale * scale;
        let mut lower: Vec<P2> = Vec::new();
        for p in &pts {
            while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= eps {
                lower.pop();
            }
            lower.push(*p);
        }
        let mut upper: Vec<P2> = Vec::new();
        for p in pts.iter().rev() {
            while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= eps {
                upper.pop();
            }
            upper.push(*p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        if lower.len() < 3 {
            // Collinear input: keep the extreme pair.
            let (a, b) = (pts[0], pts[pts.len() - 1]);
            return Some(Self { vertices: vec![a, b] });
        }
        Some(Self { vertices: lower })
    }

    pub fn is_segment(&self) -> bool {
        self.vertices.len() < 3
    }

    /// Area, or length for a segment.
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        match v.len() {
            0 | 1 => 0.0,
            2 => (v[1] - v[0]).norm(),
            m => 0.5 * (0..m).map(|k| cross(&P2::zeros(), &v[k], &v[(k + 1) % m])).sum::<f64>(),
        }
    }

    /// Center of mass of the region (midpoint for a segment).
    pub fn centroid(&self) -> P2 {
        let v = &self.vertices;
        match v.len() {
            0 => P2::zeros(),
            1 => v[0],
            2 => (v[0] + v[1]) * 0.5,
            m => {
                let mut c = P2::zeros();
                let mut a = 0.0;
                for k in 0..m {
                    let (p, q) = (v[k] - v[0], v[(k + 1) % m] - v[0]);
                    let w = p.x * q.y - p.y * q.x;
                    a += w;
                    c += (p + q) * w;
                }
                v[0] + c / (3.0 * a)
            }
        }
    }

    pub fn support(&self, w: &P2) -> f64 {
        self.vertices.iter().map(|v| v.dot(w)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership with absolute tolerance `tol`.
    pub fn contains(&self, p: &P2, tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => (p - v[0]).norm() <= tol,
            2 => {
                let d = v[1] - v[0];
                let len = d.norm();
                if len == 0.0 {
                    return (p - v[0]).norm() <= tol;
                }
                let t = (p - v[0]).dot(&d) / len;
                let off = ((p - v[0]) - d * (t / len)).norm();
                off <= tol && t >= -tol && t <= len + tol
            }
            m => (0..m).all(|k| {
                let (a, b) = (v[k], v[(k + 1) % m]);
                let e = b - a;
                cross(&a, &b, p) / e.norm() >= -tol
            }),
        }
    }

    /// Dilation by `factor` about the center of mass.
    pub fn dilate(&self, factor: f64) -> Self {
        let c = self.centroid();
        Self { vertices: self.vertices.iter().map(|v| c + (v - c) * factor).collect() }
    }

    /// Length of the longest segment inside the polygon parallel to `w`.
    pub fn chord_length(&self, w: &P2) -> f64 {
        let w = w.normalize();
        let v = &self.vertices;
        if v.len() < 3 {
            if v.len() < 2 {
                return 0.0;
            }
            let d = v[1] - v[0];
            let par = (d.dot(&w)).abs();
            return if (par - d.norm()).abs() <= 1e-12 * d.norm() { d.norm() } else { 0.0 };
        }
        // The chord length is concave in the offset, so its maximum sits on
        // a line through a vertex.
        let m = v.len();
        v.iter()
            .map(|p| {
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..m {
                    let (a, b) = (v[k], v[(k + 1) % m]);
                    let e = b - a;
                    // Inside: cross(e, x - a) >= 0.
                    let c0 = e.x * (p.y - a.y) - e.y * (p.x - a.x);
                    let c1 = e.x * w.y - e.y * w.x;
                    if c1.abs() < 1e-15 {
                        if c0 < -1e-12 * e.norm() {
                            return 0.0;
                        }
                    } else if c1 > 0.0 {
                        lo = lo.max(-c0 / c1);
                    } else {
                        hi = hi.min(-c0 / c1);
                    }
                }
                (hi - lo).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}
