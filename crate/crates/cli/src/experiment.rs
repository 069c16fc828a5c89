//! Scenario execution.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use otsurf::geometry::{ball_hull, hausdorff_distance};
use otsurf::measures::{lens_scenario, make_measure, pushforward_radial, sample_surface, SurfaceSampling};
use otsurf::transport::{mean_spacing, monge_spread, solve, SPREAD_TAU};
use otsurf::{ConvexBody, DensitySpec, DiscreteMeasure, TransportResult, VerificationReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checks::{self, BodyContext, Instance};
use crate::config::{ExperimentConfig, Scenario};
use crate::error::{Context, Result};

pub const VERSION: &str = concat!("otsurf ", env!("CARGO_PKG_VERSION"));

/// Salt separating the target sampling seed from the source one.
const TARGET_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// One grid point of a sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointResult {
    pub index: usize,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Sweep coordinates of the point.
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "W2")]
    pub w2: f64,
    pub max_spread: f64,
    pub mean_spread: f64,
    pub split_mass: f64,
    /// Mean nearest-neighbour distance of the target samples.
    pub spacing: f64,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub reports: Vec<VerificationReport>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Timing {
    pub total_seconds: f64,
    /// Per grid point, in index order.
    pub point_seconds: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub version: String,
    pub results: Vec<PointResult>,
    /// Scenario-level checks that span several grid points.
    #[serde(default)]
    pub reports: Vec<VerificationReport>,
    /// Fitted or aggregated numbers.
    #[serde(default)]
    pub summary: BTreeMap<String, f64>,
    #[serde(default)]
    pub timing: Timing,
}

impl ExperimentRecord {
    pub fn empty(config: ExperimentConfig) -> Self {
        Self {
            config,
            version: VERSION.into(),
            results: Vec::new(),
            reports: Vec::new(),
            summary: BTreeMap::new(),
            timing: Timing::default(),
        }
    }

    /// Every report in the record, scenario-level ones first.
    pub fn all_reports(&self) -> impl Iterator<Item = &VerificationReport> {
        self.reports.iter().chain(self.results.iter().flat_map(|p| p.reports.iter()))
    }

    /// Whether every hard checker passed.
    pub fn passed(&self) -> bool {
        self.all_reports().filter(|r| checks::is_hard(r)).all(|r| r.pass)
    }
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Replace the strength of a density family.
pub fn with_strength(spec: &DensitySpec, s: f64) -> DensitySpec {
    match spec {
        DensitySpec::Uniform => DensitySpec::Uniform,
        DensitySpec::TwoSided { c, axis, .. } => DensitySpec::TwoSided { delta: s, c: *c, axis: *axis },
        DensitySpec::Tilt { direction, .. } => DensitySpec::Tilt { amplitude: s, direction: *direction },
        DensitySpec::Bump { center, width, .. } => DensitySpec::Bump { amplitude: s, center: *center, width: *width },
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

struct Solved {
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    result: TransportResult,
    spread: otsurf::transport::SpreadReport,
    spacing: f64,
}

fn solve_pair(cfg: &ExperimentConfig, mu: DiscreteMeasure, nu: DiscreteMeasure, what: &str) -> Result<Solved> {
    let result = solve(&mu, &nu, &cfg.solver).ctx(|| format!("{what}: transport"))?;
    let ys = nu.positions();
    let spread = monge_spread(&result.plan, &mu.positions(), &ys, SPREAD_TAU, None);
    let spacing = mean_spacing(&ys);
    Ok(Solved { mu, nu, result, spread, spacing })
}

fn point_from(index: usize, seed: u64, n: usize, s: &Solved) -> PointResult {
    PointResult {
        index,
        seed,
        n,
        params: BTreeMap::new(),
        w2: s.result.w2,
        max_spread: s.spread.max_spread,
        mean_spread: s.spread.mean_spread,
        split_mass: s.spread.split_mass,
        spacing: s.spacing,
        metrics: BTreeMap::from([("gap".to_string(), s.result.gap)]),
        reports: Vec::new(),
    }
}

fn measures_on(
    body: &ConvexBody,
    n: usize,
    seed: u64,
    source: &DensitySpec,
    target: &DensitySpec,
    shared: bool,
) -> Result<(Arc<SurfaceSampling>, DiscreteMeasure, DiscreteMeasure)> {
    let a = Arc::new(sample_surface(body, n, seed).ctx(|| format!("sampling N={n}"))?);
    let b = if shared {
        a.clone()
    } else {
        Arc::new(sample_surface(body, n, seed ^ TARGET_SALT).ctx(|| format!("sampling N={n}"))?)
    };
    let mu = make_measure(&a, source).ctx(|| "source measure".into())?;
    let nu = make_measure(&b, target).ctx(|| "target measure".into())?;
    Ok((a, mu, nu))
}

/// Run one scenario over its grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rec = match cfg.scenario {
        Scenario::SphereSanity => sphere_sanity(cfg)?,
        Scenario::MongeRegime => monge_regime(cfg)?,
        Scenario::LensCounterexample => lens_counterexample(cfg)?,
        Scenario::ApproximationPipeline => approximation_pipeline(cfg)?,
        Scenario::VerifyAll => verify_all(cfg)?,
    };
    rec.results.sort_by_key(|p| p.index);
    for p in &mut rec.results {
        p.reports.sort_by(|a, b| a.checker.cmp(&b.checker));
    }
    rec.reports.sort_by(|a, b| a.checker.cmp(&b.checker));
    rec.timing.total_seconds = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// Run `f` on every grid index in parallel, keeping index order and timing.
fn grid<T: Send>(len: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<(Vec<T>, Vec<f64>)> {
    let out: Vec<Result<(T, f64)>> = (0..len)
        .into_par_iter()
        .map(|i| {
            let t = Instant::now();
            f(i).map(|v| (v, t.elapsed().as_secs_f64()))
        })
        .collect();
    let mut vals = Vec::with_capacity(len);
    let mut secs = Vec::with_capacity(len);
    for r in out {
        let (v, s) = r?;
        vals.push(v);
        secs.push(s);
    }
    Ok((vals, secs))
}

fn sphere_sanity(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    let body = ConvexBody::from_spec(&cfg.body).ctx(|| "body".into())?;
    let ctx = BodyContext::new(body, cfg.seed)?;
    let (results, secs) = grid(cfg.n_list.len(), |i| {
        let n = cfg.n_list[i];
        let seed = point_seed(cfg.seed, i);
        let (_, mu, nu) = measures_on(&ctx.body, n, seed, &cfg.measures.source, &cfg.measures.target, true)?;
        let s = solve_pair(cfg, mu, nu, &format!("sphere_sanity N={n}"))?;
        let mut p = point_from(i, seed, n, &s);
        let inst = Instance { mu: &s.mu, nu: &s.nu, result: &s.result, spread: &s.spread };
        p.reports.push(checks::duality_report(&s.result));
        p.reports.extend(checks::transport_checks(&ctx, &inst, &cfg.checkers, &cfg.sweep.nonsplitting_deltas));
        Ok(p)
    })?;
    let mut rec = ExperimentRecord::empty(cfg.clone());
    rec.results = results;
    rec.timing.point_seconds = secs;
    Ok(rec)
}

fn monge_regime(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    let body = ConvexBody::from_spec(&cfg.body).ctx(|| "body".into())?;
    let ctx = BodyContext::new(body, cfg.seed)?;
    let amps = &cfg.sweep.perturbations;
    let pts: Vec<(usize, f64)> = cfg.n_list.iter().flat_map(|&n| amps.iter().map(move |&a| (n, a))).collect();
    let toggles = crate::config::CheckerToggles {
        // Only the threshold is of interest per point; the full battery runs
        // in sphere_sanity and verify_all.
        threshold: cfg.checkers.threshold,
        ..all_off()
    };
    let (results, secs) = grid(pts.len(), |i| {
        let (n, amp) = pts[i];
        // Samples depend on N only, so strengths share them.
        let n_index = cfg.n_list.iter().position(|&m| m == n).unwrap_or(0);
        let seed = point_seed(cfg.seed, n_index);
        let target = with_strength(&cfg.measures.target, amp);
        let (_, mu, nu) = measures_on(&ctx.body, n, seed, &cfg.measures.source, &target, false)?;
        let s = solve_pair(cfg, mu, nu, &format!("monge_regime N={n} strength={amp}"))?;
        let mut p = point_from(i, seed, n, &s);
        p.params.insert("strength".into(), amp);
        p.metrics.insert("spread_over_spacing".into(), s.spread.max_spread / s.spacing);
        let inst = Instance { mu: &s.mu, nu: &s.nu, result: &s.result, spread: &s.spread };
        p.reports.push(checks::duality_report(&s.result));
        p.reports.extend(checks::transport_checks(&ctx, &inst, &toggles, &[]));
        if let Some(t) = p.reports.iter().find(|r| r.checker == "threshold") {
            if let Some(rhs) = t.implied_constant {
                p.metrics.insert("threshold_rhs".into(), rhs);
            }
        }
        Ok(p)
    })?;
    let mut rec = ExperimentRecord::empty(cfg.clone());
    for &amp in amps {
        let mut by_n: Vec<&PointResult> = results.iter().filter(|p| p.params["strength"] == amp).collect();
        by_n.sort_by_key(|p| p.n);
        let ok = by_n.windows(2).all(|w| w[1].max_spread <= w[0].max_spread);
        rec.summary.insert(format!("spread_nonincreasing_in_N/strength={amp}"), if ok { 1.0 } else { 0.0 });
    }
    for &n in &cfg.n_list {
        let worst = results.iter().filter(|p| p.n == n).map(|p| p.metrics["spread_over_spacing"]).fold(0.0, f64::max);
        rec.summary.insert(format!("max_spread_over_spacing/N={n}"), worst);
    }
    rec.results = results;
    rec.timing.point_seconds = secs;
    Ok(rec)
}

fn all_off() -> crate::config::CheckerToggles {
    crate::config::CheckerToggles {
        qqconv: false,
        section_convexity: false,
        section_locality: false,
        c_cone: false,
        local_to_global: false,
        lower_aleksandrov: false,
        upper_aleksandrov: false,
        stay_away_constant: false,
        stay_away: false,
        threshold: false,
        potential_lipschitz: false,
        holder_fit: false,
    }
}

fn lens_counterexample(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    let lens = &cfg.sweep.lens;
    let pts: Vec<(usize, f64, f64)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| lens.delta.iter().flat_map(move |&d| lens.k.iter().map(move |&k| (n, d, k))))
        .collect();
    let (results, secs) = grid(pts.len(), |i| {
        let (n, delta, k) = pts[i];
        // One sampling per N so that W2 differences across k are not noise.
        let n_index = cfg.n_list.iter().position(|&m| m == n).unwrap_or(0);
        let seed = point_seed(cfg.seed, n_index);
        let l = lens_scenario(lens.big_r, delta, k, n, seed).ctx(|| format!("lens delta={delta} k={k} N={n}"))?;
        let axis = l.body.lens_axis().unwrap_or(2);
        let summary = l.summary.clone();
        let s = solve_pair(cfg, l.mu, l.nu, &format!("lens delta={delta} k={k} N={n}"))?;
        let (xs, ys) = (s.mu.positions(), s.nu.positions());
        let crossing: f64 = s
            .result
            .plan
            .entries
            .iter()
            .filter(|&&(i, j, _)| (xs[i][axis] >= 0.0) != (ys[j][axis] >= 0.0))
            .map(|e| e.2)
            .sum();
        let mut p = point_from(i, seed, n, &s);
        p.params.insert("delta".into(), delta);
        p.params.insert("k".into(), k);
        p.params.insert("R".into(), lens.big_r);
        p.metrics.insert("deficit".into(), summary.deficit);
        p.metrics.insert("crossing_mass".into(), crossing);
        p.metrics.insert("top_mass_mu".into(), summary.top_mass_mu);
        p.metrics.insert("top_mass_nu".into(), summary.top_mass_nu);
        p.metrics.insert("worst_normal_product".into(), summary.worst_normal_product);
        Ok(p)
    })?;
    let mut rec = ExperimentRecord::empty(cfg.clone());
    for &n in &cfg.n_list {
        for &d in &lens.delta {
            let row: Vec<&PointResult> = results.iter().filter(|p| p.n == n && p.params["delta"] == d).collect();
            let key = format!("delta={d}/N={n}");
            if row.len() >= 2 {
                let ks: Vec<f64> = row.iter().map(|p| p.params["k"]).collect();
                let ws: Vec<f64> = row.iter().map(|p| p.w2).collect();
                rec.summary.insert(format!("w2_decay_exponent/{key}"), loglog_slope(&ks, &ws));
            }
            let min_spread = row.iter().map(|p| p.max_spread).fold(f64::INFINITY, f64::min);
            let min_split = row.iter().map(|p| p.split_mass / p.metrics["deficit"]).fold(f64::INFINITY, f64::min);
            rec.summary.insert(format!("min_max_spread/{key}"), min_spread);
            rec.summary.insert(format!("min_split_over_deficit/{key}"), min_split);
        }
    }
    rec.results = results;
    rec.timing.point_seconds = secs;
    Ok(rec)
}

fn centered(u: &[f64], m: &[f64]) -> Vec<f64> {
    let mean = u.iter().zip(m).map(|(a, b)| a * b).sum::<f64>() / m.iter().sum::<f64>();
    u.iter().map(|x| x - mean).collect()
}

fn approximation_pipeline(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    let body = ConvexBody::from_spec(&cfg.body).ctx(|| "body".into())?;
    let radii = &cfg.sweep.hull_radii;
    let hulls: Vec<(f64, ConvexBody, f64)> = radii
        .par_iter()
        .map(|&r| {
            let h = ball_hull(&body, r).ctx(|| format!("ball hull R={r}"))?;
            let d = hausdorff_distance(&body, &h, 4000);
            Ok((r, h, d))
        })
        .collect::<Result<_>>()?;
    let bases: Vec<Solved> = cfg
        .n_list
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let (_, mu, nu) =
                measures_on(&body, n, point_seed(cfg.seed, i), &cfg.measures.source, &cfg.measures.target, false)?;
            solve_pair(cfg, mu, nu, &format!("approximation base N={n}"))
        })
        .collect::<Result<_>>()?;
    let pts: Vec<(usize, usize)> = (0..cfg.n_list.len()).flat_map(|a| (0..radii.len()).map(move |b| (a, b))).collect();
    let (results, secs) = grid(pts.len(), |i| {
        let (ni, ri) = pts[i];
        let (r, hull, hd) = &hulls[ri];
        let base = &bases[ni];
        let n = cfg.n_list[ni];
        let what = format!("approximation N={n} R={r}");
        let pm = pushforward_radial(&base.mu, hull).ctx(|| what.clone())?;
        let pn = pushforward_radial(&base.nu, hull).ctx(|| what.clone())?;
        let s = solve_pair(cfg, pm.measure, pn.measure, &what)?;
        let lip = pm.bounds.lipschitz.max(pn.bounds.lipschitz);
        let u0 = centered(&base.result.duals.u, &base.mu.masses);
        let uk = centered(&s.result.duals.u, &base.mu.masses);
        let sup = uk.iter().zip(&u0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let mut p = point_from(i, point_seed(cfg.seed, ni), n, &s);
        p.params.insert("R".into(), *r);
        p.metrics.insert("hausdorff".into(), *hd);
        p.metrics.insert("lipschitz".into(), lip);
        p.metrics.insert("w2_base".into(), base.result.w2);
        p.metrics.insert("w2_bound_ratio".into(), s.result.w2 / (lip * base.result.w2));
        p.metrics.insert("sup_potential_difference".into(), sup);
        let mut bound = VerificationReport::new(
            "w2_approximation",
            "W2 after radial projection",
            n,
            s.result.w2 - 1.05 * lip * base.result.w2,
            0.0,
        )
        .with_constant(lip);
        bound.config = serde_json::json!({ "w2": s.result.w2, "w2_base": base.result.w2, "factor": 1.05 });
        p.reports.push(bound);
        for (side, b) in [("source", &pm.bounds), ("target", &pn.bounds)] {
            let worst = (b.lower - b.slack * b.observed_min).max(b.observed_max - b.slack * b.upper);
            let mut rep =
                VerificationReport::new("pushforward_density", "density bounds of radial pushforwards", n, worst, 0.0)
                    .with_constant(b.lipschitz)
                    .with_config(serde_json::to_value(b)?)
                    .note(side);
            rep.pass = b.within_bounds;
            p.reports.push(rep);
        }
        Ok(p)
    })?;

    let mut rec = ExperimentRecord::empty(cfg.clone());
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let hd: Vec<f64> = order.iter().map(|&k| hulls[k].2).collect();
    let worst_step = hd.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut r = VerificationReport::new(
        "hausdorff_decreasing",
        "ball hulls converge in Hausdorff distance",
        hd.len(),
        if hd.len() < 2 { 0.0 } else { worst_step },
        0.0,
    )
    .with_config(serde_json::json!({ "radii": order.iter().map(|&k| radii[k]).collect::<Vec<_>>(), "hausdorff": hd }));
    r.pass = hd.windows(2).all(|w| w[1] < w[0]);
    rec.reports.push(r);
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let sups: Vec<f64> =
            order.iter().map(|&ri| results[ni * radii.len() + ri].metrics["sup_potential_difference"]).collect();
        // Doubling R should halve the difference, within a factor of 3.
        let ratios: Vec<f64> = order
            .windows(2)
            .zip(sups.windows(2))
            .filter(|(o, _)| (radii[o[1]] / radii[o[0]] - 2.0).abs() < 1e-9)
            .map(|(_, s)| s[1] / s[0])
            .collect();
        let worst = ratios.iter().map(|q| (q / 0.5).max(0.5 / q)).fold(1.0, f64::max);
        let mut r = VerificationReport::new(
            "potential_convergence",
            "dual potentials converge uniformly as the hulls approach the body",
            ratios.len(),
            worst,
            3.0,
        )
        .with_config(serde_json::json!({ "N": n, "sup_differences": sups, "doubling_ratios": ratios }));
        r.samples = ratios.len();
        rec.reports.push(r);
    }
    rec.results = results;
    rec.timing.point_seconds = secs;
    Ok(rec)
}

fn verify_all(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    let body = ConvexBody::from_spec(&cfg.body).ctx(|| "body".into())?;
    let ctx = BodyContext::new(body, cfg.seed)?;
    let n = cfg.n_list[0];
    let seed = cfg.seed;
    let t = &cfg.checkers;
    let start = Instant::now();
    let (sampling, mu, nu) = measures_on(&ctx.body, n, seed, &cfg.measures.source, &cfg.measures.target, false)?;
    let s = solve_pair(cfg, mu, nu, &format!("verify_all N={n}"))?;
    let inst = Instance { mu: &s.mu, nu: &s.nu, result: &s.result, spread: &s.spread };

    type Job<'a> = Box<dyn Fn() -> Vec<VerificationReport> + Sync + 'a>;
    let mut jobs: Vec<Job> = Vec::new();
    jobs.push(Box::new(|| vec![checks::duality_report(&s.result)]));
    jobs.push(Box::new(|| checks::transport_checks(&ctx, &inst, t, &cfg.sweep.nonsplitting_deltas)));
    jobs.push(Box::new(|| checks::section_checks(&ctx, &inst, &sampling, t)));
    if t.qqconv {
        jobs.push(Box::new(|| vec![checks::qqconv(&ctx, cfg.sweep.qqconv_trials, seed)]));
    }
    if t.local_to_global {
        jobs.push(Box::new(|| vec![checks::local_to_global(&ctx, &sampling)]));
    }
    if t.lower_aleksandrov {
        jobs.push(Box::new(|| vec![checks::lower_aleksandrov(&ctx, 2000, seed)]));
    }
    if t.upper_aleksandrov {
        jobs.push(Box::new(|| vec![checks::upper_aleksandrov(&ctx, 1000, seed)]));
    }
    let reports: Vec<VerificationReport> = jobs.par_iter().flat_map_iter(|j| j()).collect();

    let mut rec = ExperimentRecord::empty(cfg.clone());
    let mut p = point_from(0, seed, n, &s);
    p.metrics.insert("diam".into(), ctx.metrics.diam);
    p.metrics.insert("geodesic_ratio".into(), ctx.metrics.geodesic_ratio);
    p.metrics.insert("radial_lipschitz".into(), ctx.metrics.radial_lipschitz);
    p.metrics.insert("conerad_half".into(), ctx.cone_half.conerad);
    p.metrics.insert("conerad_35_36".into(), ctx.cone_3536.conerad);
    rec.results.push(p);
    rec.reports = reports;
    rec.timing.point_seconds = vec![start.elapsed().as_secs_f64()];
    Ok(rec)
}
