//! Discrete probability measures on boundary samplings.

mod lens;
mod pushforward;
mod sampling;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurfacePoint;
use crate::io::fmt_f64;
use crate::Vec3;

pub use lens::{lens_scenario, LensScenario};
pub use pushforward::{pushforward_radial, Pushforward};
pub(crate) use sampling::area_weights;
pub use sampling::{patch_sampling, sample_surface, SurfaceSampling};

/// Unnormalised density on the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    /// `c - delta` where `x[axis] >= 0`, `delta` elsewhere. When `c` is
    /// omitted it is chosen so the density integrates to one against the
    /// area-normalised sampling.
    TwoSided {
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axis: Option<usize>,
    },
    /// `1 + amplitude * <x / |x|, direction>`.
    Tilt {
        amplitude: f64,
        direction: [f64; 3],
    },
    /// `1 + amplitude * exp(-|x - center|^2 / (2 width^2))`.
    Bump {
        amplitude: f64,
        center: [f64; 3],
        width: f64,
    },
}

impl DensitySpec {
    /// Evaluate at a point; `c_default` fills in an omitted two-sided level.
    fn eval(&self, p: &SurfacePoint, n: usize, c_default: f64) -> f64 {
        match self {
            DensitySpec::Uniform => 1.0,
            DensitySpec::TwoSided { delta, c, axis } => {
                if p.x[axis.unwrap_or(n)] >= 0.0 {
                    c.unwrap_or(c_default) - delta
                } else {
                    *delta
                }
            }
            DensitySpec::Tilt { amplitude, direction } => {
                let d = Vec3::from(*direction).normalize();
                1.0 + amplitude * p.x.normalize().dot(&d)
            }
            DensitySpec::Bump { amplitude, center, width } => {
                let d2 = (p.x - Vec3::from(*center)).norm_squared();
                1.0 + amplitude * (-d2 / (2.0 * width * width)).exp()
            }
        }
    }

    /// Bounds of the unnormalised density over the whole boundary.
    fn range(&self, c_default: f64) -> (f64, f64) {
        match self {
            DensitySpec::Uniform => (1.0, 1.0),
            DensitySpec::TwoSided { delta, c, .. } => {
                let top = c.unwrap_or(c_default) - delta;
                (top.min(*delta), top.max(*delta))
            }
            DensitySpec::Tilt { amplitude, .. } => (1.0 - amplitude.abs(), 1.0 + amplitude.abs()),
            DensitySpec::Bump { amplitude, .. } => (1.0f64.min(1.0 + amplitude), 1.0f64.max(1.0 + amplitude)),
        }
    }
}

/// Probability measure with masses on the points of a sampling.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    pub sampling: Arc<SurfaceSampling>,
    pub masses: Vec<f64>,
    /// Density bounds relative to the area weights.
    pub rho_min: f64,
    pub rho_max: f64,
}

impl DiscreteMeasure {
    /// Normalise `masses` and take density bounds from the data.
    pub fn new(sampling: Arc<SurfaceSampling>, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != sampling.len() {
            return Err(Error::InvalidArgument("mass count differs from sampling size".into()));
        }
        if let Some(i) = masses.iter().position(|&m| !(m >= 0.0)) {
            return Err(Error::NonPositiveDensity { index: i });
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("total mass is zero".into()));
        }
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let mut out = Self { sampling, masses, rho_min: 0.0, rho_max: 0.0 };
        let d = out.densities();
        out.rho_min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        out.rho_max = d.iter().cloned().fold(0.0, f64::max);
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.sampling.positions()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `m_i / w_i`.
    pub fn densities(&self) -> Vec<f64> {
        self.masses.iter().zip(&self.sampling.weights).map(|(m, w)| m / w).collect()
    }

    /// CSV with columns `x, y[, z], weight, mass`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let n = self.sampling.n;
        let mut head = vec!["x", "y"];
        if n == 2 {
            head.push("z");
        }
        head.extend(["nx", "ny"]);
        if n == 2 {
            head.push("nz");
        }
        head.extend(["weight", "mass"]);
        w.write_record(&head)?;
        for (k, p) in self.sampling.points.iter().enumerate() {
            let mut row: Vec<String> = p.x.iter().take(n + 1).map(|v| fmt_f64(*v)).collect();
            row.extend(p.normal.iter().take(n + 1).map(|v| fmt_f64(*v)));
            row.push(fmt_f64(self.sampling.weights[k]));
            row.push(fmt_f64(self.masses[k]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a file written by [`DiscreteMeasure::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let cols = r.headers()?.len();
        let n = match cols {
            6 => 1,
            8 => 2,
            _ => return Err(Error::InvalidArgument(format!("unexpected column count {cols}"))),
        };
        let d = n + 1;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut masses = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(e.to_string())))
                .collect::<Result<_>>()?;
            let mut x = Vec3::zeros();
            let mut nrm = Vec3::zeros();
            for k in 0..d {
                x[k] = v[k];
                nrm[k] = v[d + k];
            }
            points.push(SurfacePoint { x, normal: nrm, unique_normal: true });
            weights.push(v[2 * d]);
            masses.push(v[2 * d + 1]);
        }
        let sampling = SurfaceSampling::from_parts(n, points, weights, 0)?;
        Self::new(Arc::new(sampling), masses)
    }
}

/// Masses proportional to density times area weight.
pub fn make_measure(sampling: &Arc<SurfaceSampling>, density: &DensitySpec) -> Result<DiscreteMeasure> {
    let n = sampling.n;
    let c_default = match density {
        DensitySpec::TwoSided { delta, axis, c: None } => {
            let ax = axis.unwrap_or(n);
            let total = sampling.total_weight();
            let top: f64 = sampling
                .points
                .iter()
                .zip(&sampling.weights)
                .filter(|(p, _)| p.x[ax] >= 0.0)
                .map(|(_, w)| w)
                .sum::<f64>()
                / total;
            (1.0 + delta * (2.0 * top - 1.0)) / top
        }
        _ => 0.0,
    };
    let (lo, hi) = density.range(c_default);
    if !(lo > 0.0) {
        return Err(Error::NonPositiveDensity { index: 0 });
    }
    let mut values = Vec::with_capacity(sampling.len());
    for (i, p) in sampling.points.iter().enumerate() {
        let f = density.eval(p, n, c_default);
        if !(f > 0.0) {
            return Err(Error::NonPositiveDensity { index: i });
        }
        values.push(f);
    }
    let z: f64 = values.iter().zip(&sampling.weights).map(|(f, w)| f * w).sum();
    let masses: Vec<f64> = values.iter().zip(&sampling.weights).map(|(f, w)| f * w / z).collect();
    let total: f64 = masses.iter().sum();
    Ok(DiscreteMeasure {
        sampling: Arc::clone(sampling),
        masses: masses.iter().map(|m| m / total).collect(),
        rho_min: lo / z,
        rho_max: hi / z,
    })
}

/// Measure with masses `f(x_i) w_i`, normalised.
pub fn make_measure_with<F: Fn(&SurfacePoint) -> f64>(
    sampling: &Arc<SurfaceSampling>,
    f: F,
) -> Result<DiscreteMeasure> {
    let mut masses = Vec::with_capacity(sampling.len());
    for (i, (p, w)) in sampling.points.iter().zip(&sampling.weights).enumerate() {
        let v = f(p);
        if !(v > 0.0) {
            return Err(Error::NonPositiveDensity { index: i });
        }
        masses.push(v * w);
    }
    DiscreteMeasure::new(Arc::clone(sampling), masses)
}
