//! Graph charts over tangent planes, the c-exponential map and c-segments.

use nalgebra::Vector2;

use super::{ConvexBody, SurfacePoint};
use crate::error::{Error, Result};
use crate::Vec3;

/// Tangent-plane chart at a boundary point with a unique normal.
///
/// Tangent coordinates are [`Vector2`]; for planar bodies the second
/// coordinate is always zero.
#[derive(Clone, Debug)]
pub struct TangentChart<'a> {
    body: &'a ConvexBody,
    base: SurfacePoint,
    e1: Vec3,
    e2: Vec3,
}

/// Orthonormal tangent frame for a unit normal.
pub(crate) fn tangent_frame(n: usize, normal: &Vec3) -> (Vec3, Vec3) {
    if n == 1 {
        (Vec3::new(-normal.y, normal.x, 0.0), Vec3::zeros())
    } else {
        let a = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let e1 = normal.cross(&a).normalize();
        let e2 = normal.cross(&e1);
        (e1, e2)
    }
}

impl<'a> TangentChart<'a> {
    /// Chart at a boundary point. Fails at points without a unique normal.
    pub fn at(body: &'a ConvexBody, x0: &Vec3) -> Result<Self> {
        let base = body.normal_at(x0)?;
        Self::from_point(body, base)
    }

    pub fn from_point(body: &'a ConvexBody, base: SurfacePoint) -> Result<Self> {
        if !base.unique_normal {
            return Err(Error::NonUniqueNormal);
        }
        let (e1, e2) = tangent_frame(body.n(), &base.normal);
        Ok(Self { body, base, e1, e2 })
    }

    pub fn body(&self) -> &ConvexBody {
        self.body
    }

    pub fn base(&self) -> &SurfacePoint {
        &self.base
    }

    pub fn frame(&self) -> (Vec3, Vec3) {
        (self.e1, self.e2)
    }

    /// Tangent coordinates of `y - X0` with the normal component dropped.
    pub fn project(&self, y: &Vec3) -> Vector2<f64> {
        let d = y - self.base.x;
        Vector2::new(d.dot(&self.e1), d.dot(&self.e2))
    }

    /// Ambient offset of tangent coordinates.
    pub fn lift(&self, p: &Vector2<f64>) -> Vec3 {
        self.e1 * p.x + self.e2 * p.y
    }

    /// Concave graph function: the signed normal offset of the upper
    /// boundary point over `p`, or `None` outside the chart domain.
    pub fn beta(&self, p: &Vector2<f64>) -> Option<f64> {
        let origin = self.base.x + self.lift(p);
        let (lo, hi) = self.body.line_interval(&origin, &self.base.normal)?;
        if !(hi > lo) && p.norm() > 0.0 {
            return None;
        }
        Some(hi.min(0.0))
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        self.beta(p).is_some()
    }

    /// Boundary point over `p` (the c-exponential map).
    pub fn exp(&self, p: &Vector2<f64>) -> Result<SurfacePoint> {
        let b = self.beta(p).ok_or(Error::OutsideChartDomain)?;
        let x = self.base.x + self.lift(p) + self.base.normal * b;
        Ok(self.body.surface_point_unchecked(x))
    }

    /// Finite-difference gradient of `beta` at `p`.
    pub fn beta_gradient(&self, p: &Vector2<f64>, step: f64) -> Option<Vector2<f64>> {
        let dx = Vector2::new(step, 0.0);
        let gx = (self.beta(&(p + dx))? - self.beta(&(p - dx))?) / (2.0 * step);
        if self.body.n() == 1 {
            return Some(Vector2::new(gx, 0.0));
        }
        let dy = Vector2::new(0.0, step);
        let gy = (self.beta(&(p + dy))? - self.beta(&(p - dy))?) / (2.0 * step);
        Some(Vector2::new(gx, gy))
    }
}

/// Tangent coordinates of `y - x` at the boundary point `x`.
pub fn tangent_project(body: &ConvexBody, x: &Vec3, y: &Vec3) -> Result<Vector2<f64>> {
    Ok(TangentChart::at(body, x)?.project(y))
}

/// Point at parameter `t` on the c-segment from `xb0` to `xb1` with respect
/// to the chart base.
pub fn c_segment(chart: &TangentChart<'_>, xb0: &Vec3, xb1: &Vec3, t: f64) -> Result<SurfacePoint> {
    let n0 = chart.base.normal;
    for xb in [xb0, xb1] {
        let p = chart.body.surface_point_unchecked(*xb);
        if p.normal.dot(&n0) <= 0.0 {
            return Err(Error::NotSameSide);
        }
    }
    let p0 = chart.project(xb0);
    let p1 = chart.project(xb1);
    chart.exp(&(p0 * (1.0 - t) + p1 * t))
}

/// Mask of points whose normal has inner product above `theta` with the
/// normal at `x0`.
pub fn same_side_set(body: &ConvexBody, x0: &Vec3, theta: f64, points: &[Vec3]) -> Result<Vec<bool>> {
    let base = body.normal_at(x0)?;
    if !base.unique_normal {
        return Err(Error::NonUniqueNormal);
    }
    points
        .iter()
        .map(|p| {
            let sp = body.surface_point_unchecked(*p);
            if !sp.unique_normal {
                return Err(Error::NonUniqueNormal);
            }
            Ok(sp.normal.dot(&base.normal) > theta)
        })
        .collect()
}
