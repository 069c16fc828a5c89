//! How far an optimal plan is from being induced by a map.

use serde::{Deserialize, Serialize};

use super::TransportPlan;
use crate::geometry::knn;
use crate::Vec3;

/// Default relative threshold below which plan entries are ignored.
pub const SPREAD_TAU: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpreadReport {
    /// Diameter of the targets receiving mass from each source.
    pub spreads: Vec<f64>,
    pub max_spread: f64,
    pub mean_spread: f64,
    /// Mass leaving each source outside the cluster of its nearest receiving
    /// target.
    pub split_mass: f64,
    pub tau: f64,
    /// Single-linkage distance used for the clusters.
    pub link: f64,
}

/// Mean nearest-neighbour distance of a point cloud.
pub fn mean_spacing(points: &[Vec3]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let nn = knn(points, 1);
    nn.iter().enumerate().map(|(i, l)| (points[i] - points[l[0]]).norm()).sum::<f64>() / points.len() as f64
}

/// Spread diagnostics. `link` defaults to twice the mean target spacing.
pub fn monge_spread(plan: &TransportPlan, xs: &[Vec3], ys: &[Vec3], tau: f64, link: Option<f64>) -> SpreadReport {
    let link = link.unwrap_or_else(|| 2.0 * mean_spacing(ys));
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); xs.len()];
    for &(i, j, m) in &plan.entries {
        rows[i].push((j, m));
    }
    let mut spreads = vec![0.0; xs.len()];
    let mut split = 0.0;
    for (i, row) in rows.iter().enumerate() {
        let mass: f64 = row.iter().map(|e| e.1).sum();
        let kept: Vec<(usize, f64)> = row.iter().cloned().filter(|e| e.1 > tau * mass).collect();
        if kept.len() < 2 {
            continue;
        }
        let mut diam: f64 = 0.0;
        for (a, &(ja, _)) in kept.iter().enumerate() {
            for &(jb, _) in &kept[a + 1..] {
                diam = diam.max((ys[ja] - ys[jb]).norm());
            }
        }
        spreads[i] = diam;
        let near = (0..kept.len())
            .min_by(|&p, &q| (ys[kept[p].0] - xs[i]).norm().total_cmp(&(ys[kept[q].0] - xs[i]).norm()))
            .expect("nonempty");
        let mut in_cluster = vec![false; kept.len()];
        in_cluster[near] = true;
        let mut stack = vec![near];
        while let Some(p) = stack.pop() {
            for q in 0..kept.len() {
                if !in_cluster[q] && (ys[kept[p].0] - ys[kept[q].0]).norm() <= link {
                    in_cluster[q] = true;
                    stack.push(q);
                }
            }
        }
        split += kept.iter().zip(&in_cluster).filter(|(_, c)| !**c).map(|(e, _)| e.1).sum::<f64>();
    }
    let max_spread = spreads.iter().cloned().fold(0.0, f64::max);
    let mean_spread = if spreads.is_empty() { 0.0 } else { spreads.iter().sum::<f64>() / spreads.len() as f64 };
    SpreadReport { spreads, max_spread, mean_spread, split_mass: split, tau, link }
}
