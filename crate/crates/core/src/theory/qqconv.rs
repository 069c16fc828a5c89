//! Quantitative quasi-convexity of the cost along c-segments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::geometry::{c_segment, ConvexBody, TangentChart};
use crate::Vec3;

const ANCHOR: &str = "quasi-convexity of c-affine differences along c-segments";

/// `LHS - t * RHS` for one parameter value, with `xbt` the c-segment point.
///
/// Both sides are differences of four costs; the squared norms cancel, so
/// they are evaluated as inner products.
pub fn qqconv_violation(x0: &Vec3, x: &Vec3, xb0: &Vec3, xb1: &Vec3, xbt: &Vec3, t: f64) -> f64 {
    let d = x - x0;
    d.dot(&(xbt - xb0)) - t * d.dot(&(xb1 - xb0))
}

/// Worst violation over `t_grid` of the quasi-convexity inequality for the
/// c-segment from `xb0` to `xb1` with respect to `x0`.
pub fn qqconv_check(body: &ConvexBody, x0: &Vec3, x: &Vec3, xb0: &Vec3, xb1: &Vec3, t_grid: &[f64]) -> Result<f64> {
    let chart = TangentChart::at(body, x0)?;
    let mut worst = f64::NEG_INFINITY;
    for &t in t_grid {
        let xbt = c_segment(&chart, xb0, xb1, t)?.x;
        worst = worst.max(qqconv_violation(x0, x, xb0, xb1, &xbt, t));
    }
    Ok(worst)
}

pub(crate) fn random_direction(n: usize, rng: &mut ChaCha8Rng) -> Vec3 {
    if n == 1 {
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        return Vec3::new(a.cos(), a.sin(), 0.0);
    }
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = v.norm();
        if r > 1e-3 && r <= 1.0 {
            return v / r;
        }
    }
}

/// Random admissible quadruples: `x0` and `x` anywhere on the boundary, the
/// two slope points on the same side as `x0`. Points without a unique
/// normal are redrawn.
pub fn qqconv_batch(body: &ConvexBody, trials: usize, t_count: usize, seed: u64) -> Result<VerificationReport> {
    if t_count < 2 {
        return Err(Error::InvalidArgument("t grid needs at least two points".into()));
    }
    let t_grid: Vec<f64> = (0..t_count).map(|k| k as f64 / (t_count - 1) as f64).collect();
    let n = body.n();
    let worst = (0..trials)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let draw = |rng: &mut ChaCha8Rng| loop {
                let p = body.boundary_point(&random_direction(n, rng));
                if p.unique_normal {
                    return p;
                }
            };
            let p0 = draw(&mut rng);
            let x = draw(&mut rng).x;
            let mut slopes = Vec::with_capacity(2);
            while slopes.len() < 2 {
                let q = draw(&mut rng);
                if q.normal.dot(&p0.normal) > 0.0 {
                    slopes.push(q.x);
                }
            }
            qqconv_check(body, &p0.x, &x, &slopes[0], &slopes[1], &t_grid)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * body.diam().powi(2);
    Ok(VerificationReport::new("qqconv", ANCHOR, trials, worst, tol)
        .with_config(json!({ "trials": trials, "t_count": t_count, "seed": seed, "shape": body.spec() })))
}
