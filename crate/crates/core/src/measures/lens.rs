//! Measure pairs on the lens whose optimal plans must split mass.

use std::sync::Arc;

use serde::Serialize;

use super::{make_measure, sample_surface, DensitySpec, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;

#[derive(Clone, Debug)]
pub struct LensScenario {
    pub body: ConvexBody,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub summary: LensSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct LensSummary {
    pub big_r: f64,
    pub delta: f64,
    pub k: f64,
    /// Density level fixed from the sampled top-area fraction.
    pub c: f64,
    pub top_area_fraction: f64,
    pub top_mass_mu: f64,
    pub top_mass_nu: f64,
    /// `mu(top) - nu(top)`.
    pub deficit: f64,
    /// Largest normal inner product between a top and a bottom sample.
    pub worst_normal_product: f64,
}

/// Lens of radius `big_r` in R^3 with `mu` of density `C - delta` on the top
/// cap and `delta` on the bottom, and `nu` with `delta` replaced by
/// `(1 + 1/k) delta`. `k = inf` gives `nu = mu`.
pub fn lens_scenario(big_r: f64, delta: f64, k: f64, count: usize, seed: u64) -> Result<LensScenario> {
    if big_r < 5.0 {
        return Err(Error::InvalidArgument(format!("lens radius {big_r} below 5")));
    }
    if !(delta > 0.0 && delta <= 0.2) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 0.2]")));
    }
    if !(k >= 1.0) {
        return Err(Error::InvalidArgument(format!("k {k} below 1")));
    }
    let body = ConvexBody::lens(2, big_r)?;
    let axis = body.lens_axis().expect("lens has an axis");
    let sampling = Arc::new(sample_surface(&body, count, seed)?);

    let is_top = |i: usize| sampling.points[i].x[axis] >= 0.0;
    let mut worst = f64::NEG_INFINITY;
    for i in (0..sampling.len()).filter(|&i| is_top(i) && sampling.points[i].unique_normal) {
        for j in (0..sampling.len()).filter(|&j| !is_top(j) && sampling.points[j].unique_normal) {
            worst = worst.max(sampling.points[i].normal.dot(&sampling.points[j].normal));
        }
    }
    if worst >= 0.0 {
        return Err(Error::NormalProductNonNegative { value: worst });
    }

    let total = sampling.total_weight();
    let top_frac: f64 = (0..sampling.len()).filter(|&i| is_top(i)).map(|i| sampling.weights[i]).sum::<f64>() / total;
    let c = (1.0 + delta * (2.0 * top_frac - 1.0)) / top_frac;
    let mu = make_measure(&sampling, &DensitySpec::TwoSided { delta, c: Some(c), axis: Some(axis) })?;
    let delta_k = delta * (1.0 + 1.0 / k);
    let nu = make_measure(&sampling, &DensitySpec::TwoSided { delta: delta_k, c: Some(c), axis: Some(axis) })?;
    let top_mass = |m: &DiscreteMeasure| (0..m.len()).filter(|&i| is_top(i)).map(|i| m.masses[i]).sum::<f64>();
    let (tm, tn) = (top_mass(&mu), top_mass(&nu));
    Ok(LensScenario {
        body,
        mu,
        nu,
        summary: LensSummary {
            big_r,
            delta,
            k,
            c,
            top_area_fraction: top_frac,
            top_mass_mu: tm,
            top_mass_nu: tn,
            deficit: tm - tn,
            worst_normal_product: worst,
        },
    })
}
