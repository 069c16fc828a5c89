//! Empirical Hölder exponent of a map-like plan.

use serde::{Deserialize, Serialize};

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::transport::TransportPlan;
use crate::Vec3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderFit {
    /// Slope of `log d(T X, T Y)` against `log d(X, Y)`.
    pub alpha: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub pairs: usize,
    /// Pairs dropped because their images coincide.
    pub collapsed: usize,
}

impl HolderFit {
    pub fn report(&self) -> VerificationReport {
        // No target exponent exists; the report only records the fit.
        VerificationReport::new("holder_fit", "Hölder regularity of the transport map", self.pairs, 0.0, 0.0)
            .with_constant(self.alpha)
            .with_config(serde_json::to_value(self).unwrap_or_default())
    }
}

/// Fit the exponent of the barycentric map of `plan` over source pairs
/// closer than `0.1 * diam`.
///
/// Refuses plans whose spread exceeds `scale`, where a map is not a fair
/// description. At most `max_pairs` evenly strided pairs enter the fit.
pub fn holder_fit(
    xs: &[Vec3],
    ys: &[Vec3],
    plan: &TransportPlan,
    max_spread: f64,
    scale: f64,
    diam: f64,
    max_pairs: usize,
) -> Result<HolderFit> {
    if max_spread > scale {
        return Err(Error::PlanNotMapLike { spread: max_spread, scale });
    }
    let mut img = vec![Vec3::zeros(); xs.len()];
    let mut mass = vec![0.0; xs.len()];
    for &(i, j, m) in &plan.entries {
        img[i] += ys[j] * m;
        mass[i] += m;
    }
    let rows: Vec<usize> = (0..xs.len()).filter(|&i| mass[i] > 0.0).collect();
    for &i in &rows {
        img[i] /= mass[i];
    }
    let cut = 0.1 * diam;
    let mut cand = Vec::new();
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let d = (xs[i] - xs[j]).norm();
            if d > 0.0 && d <= cut {
                cand.push((i, j, d));
            }
        }
    }
    let stride = (cand.len() / max_pairs.max(1)).max(1);
    let mut pts = Vec::new();
    let mut collapsed = 0;
    for &(i, j, d) in cand.iter().step_by(stride) {
        let dt = (img[i] - img[j]).norm();
        if dt > 0.0 {
            pts.push((d.ln(), dt.ln()));
        } else {
            collapsed += 1;
        }
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientSamples("too few pairs for a Hölder fit".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientSamples("pair distances do not vary".into()));
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - alpha * p.0).powi(2)).sum::<f64>() / k).sqrt();
    Ok(HolderFit { alpha, intercept, residual, pairs: pts.len(), collapsed })
}
