//! Transfer of measures between bodies along rays from the origin.

use std::sync::Arc;

use serde::Serialize;

use super::{area_weights, DiscreteMeasure, SurfaceSampling};
use crate::error::{Error, Result};
use crate::geometry::{knn, ConvexBody, SurfacePoint};
use crate::Vec3;

#[derive(Clone, Debug)]
pub struct Pushforward {
    pub measure: DiscreteMeasure,
    pub bounds: DensityBounds,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityBounds {
    /// Sampled bi-Lipschitz constant of the radial maps involved.
    pub lipschitz: f64,
    pub lower: f64,
    pub upper: f64,
    pub observed_min: f64,
    pub observed_max: f64,
    /// Multiplicative slack allowed for discretisation.
    pub slack: f64,
    pub within_bounds: bool,
}

fn arc(a: &Vec3, b: &Vec3) -> f64 {
    a.normalize().dot(&b.normalize()).clamp(-1.0, 1.0).acos()
}

/// Move every sample of `measure` to the boundary of `target` along its ray
/// from the origin, keep the masses, and recompute area weights there.
pub fn pushforward_radial(measure: &DiscreteMeasure, target: &ConvexBody) -> Result<Pushforward> {
    let src = &measure.sampling;
    if src.n != target.n() {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let mut points: Vec<SurfacePoint> = Vec::with_capacity(src.len());
    for p in &src.points {
        if p.x.norm() < 1e-12 * target.diam() {
            return Err(Error::OriginNotInterior);
        }
        points.push(target.boundary_point(&p.x));
    }
    let weights = area_weights(src.n, &points);
    let sampling = SurfaceSampling::from_parts(src.n, points, weights, src.seed)?;

    // Radial projection constants of both bodies and of the composed map,
    // sampled on neighbour pairs.
    let xs = src.positions();
    let ys = sampling.positions();
    let mut lip: f64 = 1.0;
    for (i, list) in knn(&xs, 8).iter().enumerate() {
        for &j in list {
            let s = arc(&xs[i], &xs[j]);
            let dx = (xs[i] - xs[j]).norm();
            let dy = (ys[i] - ys[j]).norm();
            if s > 0.0 && dx > 0.0 && dy > 0.0 {
                lip = lip.max(dx / s).max(s / dx).max(dy / s).max(s / dy).max(dy / dx).max(dx / dy);
            }
        }
    }

    let src_rho = measure.densities();
    let rho_min = src_rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let rho_max = src_rho.iter().cloned().fold(0.0, f64::max);
    let e = 2 * src.n as i32;
    let lower = lip.powi(-e) * rho_min;
    let upper = lip.powi(e) * rho_max;
    let out = DiscreteMeasure::new(Arc::new(sampling), measure.masses.clone())?;
    let rho = out.densities();
    let observed_min = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let observed_max = rho.iter().cloned().fold(0.0, f64::max);
    let slack = 1.1;
    Ok(Pushforward {
        bounds: DensityBounds {
            lipschitz: lip,
            lower,
            upper,
            observed_min,
            observed_max,
            slack,
            within_bounds: observed_min * slack >= lower && observed_max <= slack * upper,
        },
        measure: DiscreteMeasure { rho_min: lower, rho_max: upper, ..out },
    })
}
