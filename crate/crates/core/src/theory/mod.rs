//! Numeric checkers for the quantitative estimates.

mod aleksandrov;
mod constants;
mod holder;
mod polygon;
mod potential;
mod qqconv;
mod section;

pub use aleksandrov::{
    lower_aleksandrov_check, upper_aleksandrov_check, vertex_section, Confinement, DirectionRatio, LowerAleksandrov,
    UpperAleksandrov, VertexSection, VertexSectionParams,
};
pub use constants::{
    nonsplitting_scan, potential_lipschitz_check, stay_away_check, stay_away_constant, threshold_eval, LipschitzCheck,
    NonsplittingRow, StayAwayCheck, StayAwayConstant, Threshold,
};
pub use holder::{holder_fit, HolderFit};
pub use polygon::ConvexPolygon;
pub use potential::{local_to_global_check, LocalToGlobal, SyntheticPotential};
pub use qqconv::{qqconv_batch, qqconv_check, qqconv_violation};
pub use section::{c_cone_eval, section_extract, section_locality_check, CCone, Section, SectionLocality, SectionSpec};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::cost;
use crate::Vec3;

/// Outcome of one checker run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checker: String,
    /// Name of the estimate being checked.
    pub anchor: String,
    pub samples: usize,
    /// Signed; the check passes when this is at most `tolerance`.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub implied_constant: Option<f64>,
    pub pass: bool,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(checker: &str, anchor: &str, samples: usize, worst_violation: f64, tolerance: f64) -> Self {
        Self {
            checker: checker.into(),
            anchor: anchor.into(),
            samples,
            worst_violation,
            tolerance,
            implied_constant: None,
            pass: worst_violation <= tolerance,
            config: serde_json::Value::Null,
            notes: Vec::new(),
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.implied_constant = Some(c);
        self
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

/// For every target, the source index minimising `u_i + c(x_i, y)`: the
/// target lies in the c-subdifferential of `u` at that source.
pub(crate) fn assign_targets(u: &[f64], xs: &[Vec3], ys: &[Vec3]) -> Vec<usize> {
    ys.par_iter()
        .map(|y| {
            let mut best = (f64::INFINITY, 0);
            for (i, (x, ui)) in xs.iter().zip(u).enumerate() {
                let v = ui + cost(x, y);
                if v < best.0 {
                    best = (v, i);
                }
            }
            best.1
        })
        .collect()
}
