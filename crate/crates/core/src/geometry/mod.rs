//! Convex bodies in R^2 and R^3 and the boundary primitives built on them.
//!
//! A body with boundary dimension `n = 1` is a planar convex region embedded
//! in the `z = 0` plane; all points are stored as [`Vec3`] either way.

mod chart;
mod cone;
mod hull;
mod metrics;
pub(crate) mod shape;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;
use shape::{Core, Shape};

pub(crate) use chart::tangent_frame;
pub use chart::{c_segment, same_side_set, tangent_project, TangentChart};
pub use cone::CONERAD_SAFETY;
pub use cone::{cone_inclusion_check, conerad, ConeCheck, ConeParams};
pub(crate) use metrics::knn;
pub use metrics::{body_metrics, body_metrics_with, hausdorff_distance, BodyMetrics, GeodesicGraph, GEODESIC_K};

/// Serializable description of a body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    /// Ball; the length of `center` (2 or 3) fixes the ambient dimension.
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Ellipsoid {
        semi_axes: Vec<f64>,
    },
    /// Two-cap lens of axial half-thickness 1 built from balls of radius `R`.
    Lens {
        #[serde(rename = "R")]
        big_r: f64,
        #[serde(default = "default_n")]
        n: usize,
    },
    Stadium2d {
        half_length: f64,
        cap_radius: f64,
    },
    RoundedBox3d {
        half_widths: [f64; 3],
        corner_radius: f64,
    },
    BallHull {
        base: Box<ShapeSpec>,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        directions: Option<usize>,
    },
}

fn default_n() -> usize {
    2
}

/// A boundary point with its outward normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: Vec3,
    pub normal: Vec3,
    /// False at points where the normal cone is more than a ray (lens rim,
    /// ball-hull creases); `normal` is then a deterministic selection.
    pub unique_normal: bool,
}

/// Solid convex body containing the origin in its interior.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    n: usize,
    pub(crate) shape: Shape,
    spec: ShapeSpec,
    diam: f64,
    inradius: f64,
    outradius: f64,
}

impl ConvexBody {
    pub fn from_spec(spec: &ShapeSpec) -> Result<Self> {
        match spec {
            ShapeSpec::Ball { center, radius } => {
                let c = vec_from(center)?;
                Self::ball_impl(center.len() - 1, c, *radius, spec.clone())
            }
            ShapeSpec::Ellipsoid { semi_axes } => {
                let n = semi_axes.len().checked_sub(1).filter(|&n| n == 1 || n == 2);
                let n = n.ok_or_else(|| Error::InvalidShape("ellipsoid needs 2 or 3 semi-axes".into()))?;
                if semi_axes.iter().any(|&a| !(a > 0.0)) {
                    return Err(Error::InvalidShape("semi-axes must be positive".into()));
                }
                let a = Vec3::new(semi_axes[0], semi_axes[1], if n == 2 { semi_axes[2] } else { 1.0 });
                let amax = semi_axes.iter().cloned().fold(0.0, f64::max);
                let amin = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
                Ok(Self {
                    n,
                    shape: Shape::Ellipsoid { a },
                    spec: spec.clone(),
                    diam: 2.0 * amax,
                    inradius: amin,
                    outradius: amax,
                })
            }
            ShapeSpec::Lens { big_r, n } => {
                if *n != 1 && *n != 2 {
                    return Err(Error::InvalidShape("lens needs n = 1 or 2".into()));
                }
                if !(*big_r > 1.0) {
                    return Err(Error::InvalidShape("lens radius must exceed 1".into()));
                }
                let rim = (2.0 * big_r - 1.0).sqrt();
                Ok(Self {
                    n: *n,
                    shape: Shape::Lens { r: *big_r, off: big_r - 1.0, axis: *n },
                    spec: spec.clone(),
                    diam: 2.0 * rim.max(1.0),
                    inradius: rim.min(1.0),
                    outradius: rim.max(1.0),
                })
            }
            ShapeSpec::Stadium2d { half_length, cap_radius } => {
                let (a, r) = (*half_length, *cap_radius);
                if !(a >= 0.0 && r > 0.0) {
                    return Err(Error::InvalidShape("stadium needs half_length >= 0, cap_radius > 0".into()));
                }
                Ok(Self {
                    n: 1,
                    shape: Shape::Rounded { core: Core::Segment(a), r },
                    spec: spec.clone(),
                    diam: 2.0 * (a + r),
                    inradius: r,
                    outradius: a + r,
                })
            }
            ShapeSpec::RoundedBox3d { half_widths, corner_radius } => {
                let r = *corner_radius;
                let h = Vec3::new(half_widths[0] - r, half_widths[1] - r, half_widths[2] - r);
                if !(r > 0.0) || h.iter().any(|&v| v < 0.0) {
                    return Err(Error::InvalidShape("rounded box needs 0 < corner_radius <= every half width".into()));
                }
                let inr = half_widths.iter().cloned().fold(f64::INFINITY, f64::min);
                Ok(Self {
                    n: 2,
                    shape: Shape::Rounded { core: Core::Cuboid(h), r },
                    spec: spec.clone(),
                    diam: 2.0 * (h.norm() + r),
                    inradius: inr,
                    outradius: h.norm() + r,
                })
            }
            ShapeSpec::BallHull { base, radius, directions } => {
                let base = ConvexBody::from_spec(base)?;
                hull::ball_hull_with(&base, *radius, directions.unwrap_or(0))
            }
        }
    }

    fn ball_impl(n: usize, c: Vec3, r: f64, spec: ShapeSpec) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidShape("radius must be positive".into()));
        }
        if n != 1 && n != 2 {
            return Err(Error::InvalidShape("ball center needs 2 or 3 coordinates".into()));
        }
        if c.norm() >= r {
            return Err(Error::OriginNotInterior);
        }
        Ok(Self {
            n,
            shape: Shape::Ball { c, r },
            spec,
            diam: 2.0 * r,
            inradius: r - c.norm(),
            outradius: r + c.norm(),
        })
    }

    /// Ball in R^{n+1}.
    pub fn ball(n: usize, center: Vec3, radius: f64) -> Result<Self> {
        let coords: Vec<f64> = center.iter().take(n + 1).cloned().collect();
        let c = if n == 1 { Vec3::new(center.x, center.y, 0.0) } else { center };
        Self::ball_impl(n, c, radius, ShapeSpec::Ball { center: coords, radius })
    }

    pub fn unit_sphere() -> Self {
        Self::ball(2, Vec3::zeros(), 1.0).expect("unit ball is valid")
    }

    pub fn unit_circle() -> Self {
        Self::ball(1, Vec3::zeros(), 1.0).expect("unit disc is valid")
    }

    pub fn lens(n: usize, big_r: f64) -> Result<Self> {
        Self::from_spec(&ShapeSpec::Lens { big_r, n })
    }

    pub fn stadium(half_length: f64, cap_radius: f64) -> Result<Self> {
        Self::from_spec(&ShapeSpec::Stadium2d { half_length, cap_radius })
    }

    pub fn rounded_box(half_widths: [f64; 3], corner_radius: f64) -> Result<Self> {
        Self::from_spec(&ShapeSpec::RoundedBox3d { half_widths, corner_radius })
    }

    pub fn ellipsoid(semi_axes: &[f64]) -> Result<Self> {
        Self::from_spec(&ShapeSpec::Ellipsoid { semi_axes: semi_axes.to_vec() })
    }

    pub(crate) fn from_parts(
        n: usize,
        shape: Shape,
        spec: ShapeSpec,
        diam: f64,
        inradius: f64,
        outradius: f64,
    ) -> Self {
        Self { n, shape, spec, diam, inradius, outradius }
    }

    /// Boundary dimension; the ambient space is R^{n+1}.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &ShapeSpec {
        &self.spec
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// Radius of the largest origin-centred ball inside the body.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Radius of the smallest origin-centred ball containing the body.
    pub fn outradius(&self) -> f64 {
        self.outradius
    }

    /// False for the lens, whose rim carries a cone of normals.
    pub fn is_c1(&self) -> bool {
        !matches!(self.shape, Shape::Lens { .. })
    }

    pub fn is_lens(&self) -> bool {
        matches!(self.shape, Shape::Lens { .. })
    }

    /// Axis splitting the lens into its two caps.
    pub fn lens_axis(&self) -> Option<usize> {
        match self.shape {
            Shape::Lens { axis, .. } => Some(axis),
            _ => None,
        }
    }

    /// Closed-form surface area (perimeter for n = 1) where one is known.
    pub fn analytic_area(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match &self.shape {
            Shape::Ball { r, .. } => Some(if self.n == 1 { 2.0 * PI * r } else { 4.0 * PI * r * r }),
            Shape::Lens { r, off, .. } => {
                let cap_height = r - off;
                Some(if self.n == 1 {
                    let half_angle = ((r * r - off * off).sqrt() / r).asin();
                    4.0 * r * half_angle
                } else {
                    2.0 * 2.0 * PI * r * cap_height
                })
            }
            Shape::Rounded { core: Core::Segment(a), r } if self.n == 1 => Some(4.0 * a + 2.0 * PI * r),
            Shape::Rounded { core: Core::Cuboid(h), r } => {
                let (a, b, c) = (2.0 * h.x, 2.0 * h.y, 2.0 * h.z);
                Some(2.0 * (a * b + b * c + a * c) + 2.0 * PI * r * (a + b + c) + 4.0 * PI * r * r)
            }
            _ => None,
        }
    }

    /// Convex level function: negative inside, zero on the boundary.
    pub fn level(&self, x: &Vec3) -> f64 {
        self.shape.level(x)
    }

    pub fn contains(&self, x: &Vec3, tol: f64) -> bool {
        self.shape.level(x) <= 0.0 || self.shape.dist_outside(x) <= tol
    }

    /// Euclidean distance from `x` to the solid body (zero inside).
    pub fn distance(&self, x: &Vec3) -> f64 {
        self.shape.dist_outside(x)
    }

    /// Distance from `x` to the boundary, exact or bounded below.
    pub fn boundary_gap(&self, x: &Vec3) -> f64 {
        let l = self.shape.level(x);
        if l > 0.0 {
            return self.shape.dist_outside(x);
        }
        match &self.shape {
            Shape::Ellipsoid { a } => -l * a.min(),
            _ => -l,
        }
    }

    /// Parameter interval of the line `p + t d` (unit `d`) inside the body.
    pub fn line_interval(&self, p: &Vec3, d: &Vec3) -> Option<(f64, f64)> {
        self.shape.line_interval(p, d, self.outradius + p.norm())
    }

    /// Radial function `sup { r : r w in body }` for a unit `w`.
    pub fn radial(&self, w: &Vec3) -> f64 {
        self.line_interval(&Vec3::zeros(), w).map(|(_, hi)| hi).unwrap_or(0.0)
    }

    /// Boundary point in the direction `w` from the origin.
    pub fn boundary_point(&self, w: &Vec3) -> SurfacePoint {
        let w = w.normalize();
        self.surface_point_unchecked(w * self.radial(&w))
    }

    pub(crate) fn surface_point_unchecked(&self, x: Vec3) -> SurfacePoint {
        let (normal, unique_normal) = self.shape.normal(&x, self.diam);
        SurfacePoint { x, normal, unique_normal }
    }

    /// Outward normal at a boundary point; non-unique normals are flagged on
    /// the returned point rather than reported as errors.
    pub fn normal_at(&self, x: &Vec3) -> Result<SurfacePoint> {
        let gap = self.boundary_gap(x);
        if gap > 1e-6 * self.diam {
            return Err(Error::PointOffBoundary { distance: gap });
        }
        Ok(self.surface_point_unchecked(*x))
    }

    /// Support function for a unit direction.
    pub fn support(&self, u: &Vec3) -> f64 {
        if let Some(h) = self.shape.support(u) {
            return h;
        }
        direction_grid(self.n, 4096).iter().map(|w| self.boundary_point(w).x.dot(u)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest distance from `c` to a point of the body.
    pub fn farthest(&self, c: &Vec3) -> f64 {
        if let Some(f) = self.shape.farthest(c) {
            return f;
        }
        let pts: Vec<Vec3> = direction_grid(self.n, if self.n == 1 { 8192 } else { 20000 })
            .iter()
            .map(|w| self.boundary_point(w).x)
            .collect();
        // Grid scan plus a second-order allowance for the grid spacing.
        let best = pts.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
        let spacing = if self.n == 1 {
            2.0 * std::f64::consts::PI / 8192.0
        } else {
            (4.0 * std::f64::consts::PI / 20000.0).sqrt()
        };
        best + spacing * spacing * self.outradius
    }

    /// Ambient vectors of a point in the plane of a planar body are kept with
    /// `z = 0`; this zeroes the unused coordinate.
    pub fn embed(&self, v: Vec3) -> Vec3 {
        if self.n == 1 {
            Vec3::new(v.x, v.y, 0.0)
        } else {
            v
        }
    }
}

fn vec_from(v: &[f64]) -> Result<Vec3> {
    match v.len() {
        2 => Ok(Vec3::new(v[0], v[1], 0.0)),
        3 => Ok(Vec3::new(v[0], v[1], v[2])),
        _ => Err(Error::InvalidShape("expected 2 or 3 coordinates".into())),
    }
}

/// Quasi-uniform unit directions: equally spaced angles for n = 1, a
/// Fibonacci lattice for n = 2.
pub fn direction_grid(n: usize, count: usize) -> Vec<Vec3> {
    use std::f64::consts::PI;
    if n == 1 {
        (0..count)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let s = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * k as f64;
                Vec3::new(s * phi.cos(), s * phi.sin(), z)
            })
            .collect()
    }
}

/// Half-squared distance cost.
#[inline]
pub fn cost(x: &Vec3, y: &Vec3) -> f64 {
    0.5 * (x - y).norm_squared()
}

pub use hull::ball_hull;
