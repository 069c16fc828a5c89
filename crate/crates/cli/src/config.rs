//! Experiment configuration as read from JSON.

use std::path::{Path, PathBuf};

use otsurf::transport::SolverSpec;
use otsurf::{DensitySpec, ShapeSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// One body, `mu` and `nu` on the same samples; transport checkers per N.
    SphereSanity,
    /// Uniform source against perturbed targets over a strength sweep.
    MongeRegime,
    /// Two-cap lens with shrinking density mismatch.
    LensCounterexample,
    /// Ball hulls of the body, pushed-forward measures and their transport.
    ApproximationPipeline,
    /// Every theory checker once.
    VerifyAll,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default = "uniform")]
    pub source: DensitySpec,
    #[serde(default = "default_target")]
    pub target: DensitySpec,
}

fn uniform() -> DensitySpec {
    DensitySpec::Uniform
}

fn default_target() -> DensitySpec {
    DensitySpec::Tilt { amplitude: 0.1, direction: [1.0, 0.5, 0.3] }
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self { source: uniform(), target: default_target() }
    }
}

/// Which checkers run. Everything is on by default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckerToggles {
    pub qqconv: bool,
    pub section_convexity: bool,
    pub section_locality: bool,
    pub c_cone: bool,
    pub local_to_global: bool,
    pub lower_aleksandrov: bool,
    pub upper_aleksandrov: bool,
    pub stay_away_constant: bool,
    pub stay_away: bool,
    pub threshold: bool,
    pub potential_lipschitz: bool,
    pub holder_fit: bool,
}

impl Default for CheckerToggles {
    fn default() -> Self {
        Self {
            qqconv: true,
            section_convexity: true,
            section_locality: true,
            c_cone: true,
            local_to_global: true,
            lower_aleksandrov: true,
            upper_aleksandrov: true,
            stay_away_constant: true,
            stay_away: true,
            threshold: true,
            potential_lipschitz: true,
            holder_fit: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LensSweep {
    #[serde(rename = "R", default = "default_lens_r")]
    pub big_r: f64,
    #[serde(default = "default_lens_delta")]
    pub delta: Vec<f64>,
    #[serde(default = "default_lens_k")]
    pub k: Vec<f64>,
}

fn default_lens_r() -> f64 {
    5.0
}

fn default_lens_delta() -> Vec<f64> {
    vec![0.05]
}

fn default_lens_k() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0]
}

impl Default for LensSweep {
    fn default() -> Self {
        Self { big_r: default_lens_r(), delta: default_lens_delta(), k: default_lens_k() }
    }
}

/// Scenario-specific sweep parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Target strengths for the Monge regime; replaces the amplitude (or
    /// `delta`) of the target density.
    pub perturbations: Vec<f64>,
    pub lens: LensSweep,
    /// Ball-hull radii for the approximation pipeline.
    pub hull_radii: Vec<f64>,
    /// Random quadruples for the quasi-convexity checker.
    pub qqconv_trials: usize,
    /// Nonsplitting radii as fractions of `conerad`.
    pub nonsplitting_deltas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            perturbations: vec![0.2, 0.1, 0.05],
            lens: LensSweep::default(),
            hull_radii: vec![4.0, 8.0, 16.0, 32.0],
            qqconv_trials: 2000,
            nonsplitting_deltas: vec![0.25, 0.5, 0.75, 1.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_body")]
    pub body: ShapeSpec,
    #[serde(default)]
    pub measures: MeasureConfig,
    #[serde(rename = "N", default = "default_n")]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_solver")]
    pub solver: SolverSpec,
    #[serde(default)]
    pub checkers: CheckerToggles,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_body() -> ShapeSpec {
    ShapeSpec::Ball { center: vec![0.0; 3], radius: 1.0 }
}

fn default_n() -> Vec<usize> {
    vec![500]
}

fn default_solver() -> SolverSpec {
    SolverSpec::Exact
}

impl ExperimentConfig {
    /// Defaults for everything but the scenario.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            body: default_body(),
            measures: MeasureConfig::default(),
            n_list: default_n(),
            seed: 0,
            solver: default_solver(),
            checkers: CheckerToggles::default(),
            sweep: SweepConfig::default(),
            output: None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(s).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        let cfg: Self = serde_json::from_value(raw.clone()).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        // serde lets extra keys through on unit variants such as
        // `{"kind": "uniform"}`; compare against what was understood.
        let echo = serde_json::to_value(&cfg)?;
        if let Some(path) = unknown_key(&raw, &echo, "") {
            return Err(CliError::ConfigInvalid(format!("unknown key `{path}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.into(), source: e })?;
        Self::from_json_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::ConfigInvalid(m));
        if self.n_list.is_empty() {
            return bad("`N` must list at least one sample count".into());
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 16) {
            return bad(format!("sample count {n} is below 16"));
        }
        if self.sweep.perturbations.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("perturbations must be finite and nonnegative".into());
        }
        let lens = &self.sweep.lens;
        if lens.delta.is_empty() || lens.k.is_empty() {
            return bad("lens sweep needs at least one delta and one k".into());
        }
        if self.sweep.hull_radii.iter().any(|r| !(*r > 0.0)) {
            return bad("hull radii must be positive".into());
        }
        if let SolverSpec::Entropic { epsilon, .. } = self.solver {
            if !(epsilon > 0.0) {
                return bad("entropic epsilon must be positive".into());
            }
        }
        Ok(())
    }
}

/// First key present in `raw` but absent from `echo`. Null inputs are
/// skipped since optional fields may be serialised without them.
fn unknown_key(raw: &serde_json::Value, echo: &serde_json::Value, at: &str) -> Option<String> {
    use serde_json::Value;
    match (raw, echo) {
        (Value::Object(r), Value::Object(e)) => {
            for (k, v) in r {
                if v.is_null() {
                    continue;
                }
                let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                match e.get(k) {
                    None => return Some(path),
                    Some(ev) => {
                        if let Some(p) = unknown_key(v, ev, &path) {
                            return Some(p);
                        }
                    }
                }
            }
            None
        }
        (Value::Array(r), Value::Array(e)) => {
            r.iter().zip(e).enumerate().find_map(|(i, (a, b))| unknown_key(a, b, &format!("{at}[{i}]")))
        }
        _ => None,
    }
}
