//! Checker batteries shared by the scenarios.

use nalgebra::Vector2;
use otsurf::geometry::{body_metrics, conerad, BodyMetrics, ConeParams, GeodesicGraph, GEODESIC_K};
use otsurf::measures::SurfaceSampling;
use otsurf::theory::{
    c_cone_eval, holder_fit, local_to_global_check, lower_aleksandrov_check, nonsplitting_scan,
    potential_lipschitz_check, qqconv_batch, section_extract, section_locality_check, stay_away_check,
    stay_away_constant, threshold_eval, upper_aleksandrov_check, vertex_section, Confinement, SectionSpec,
    SyntheticPotential, VertexSectionParams,
};
use otsurf::transport::{mean_spacing, SpreadReport};
use otsurf::{DiscreteMeasure, TangentChart, TransportResult, Vec3, VerificationReport};

use crate::config::CheckerToggles;
use crate::error::{Context, Result};

/// Checkers whose failure does not fail a `verify` run: the Hölder fit has
/// no target exponent and the threshold lies far below discrete resolution.
pub const SOFT_CHECKERS: [&str; 2] = ["holder_fit", "threshold"];

pub fn is_hard(r: &VerificationReport) -> bool {
    !SOFT_CHECKERS.contains(&r.checker.as_str())
}

const THETA_STAY_AWAY: f64 = 0.5;
const THETA_ALEKSANDROV: f64 = 35.0 / 36.0;
const METRIC_BUDGET: usize = 1500;

/// Geometric constants of one body, computed once per run.
pub(crate) struct BodyContext {
    pub body: otsurf::ConvexBody,
    pub metrics: BodyMetrics,
    pub cone_half: ConeParams,
    pub cone_3536: ConeParams,
}

impl BodyContext {
    pub fn new(body: otsurf::ConvexBody, seed: u64) -> Result<Self> {
        let metrics = body_metrics(&body, METRIC_BUDGET, seed).ctx(|| "body metrics".into())?;
        let cone_half = conerad(&body, THETA_STAY_AWAY, METRIC_BUDGET, seed).ctx(|| "conerad(1/2)".into())?;
        let cone_3536 = conerad(&body, THETA_ALEKSANDROV, METRIC_BUDGET, seed).ctx(|| "conerad(35/36)".into())?;
        Ok(Self { body, metrics, cone_half, cone_3536 })
    }

    fn n(&self) -> usize {
        self.body.n()
    }

    /// A generic boundary point away from symmetry axes.
    fn generic_point(&self) -> Vec3 {
        let w = if self.n() == 1 { Vec3::new(0.3, 1.0, 0.0) } else { Vec3::new(0.2, 0.1, 1.0) };
        self.body.boundary_point(&w.normalize()).x
    }
}

/// Turn a checker error into a failing report so a battery keeps going.
fn failed(checker: &str, anchor: &str, err: impl std::fmt::Display) -> VerificationReport {
    let mut r = VerificationReport::new(checker, anchor, 0, f64::INFINITY, 0.0).note(format!("error: {err}"));
    r.pass = false;
    r
}

fn skipped(checker: &str, anchor: &str, why: &str) -> VerificationReport {
    VerificationReport::new(checker, anchor, 0, 0.0, 0.0).note(format!("skipped: {why}"))
}

fn or_failed(checker: &str, anchor: &str, r: otsurf::Result<VerificationReport>) -> VerificationReport {
    r.unwrap_or_else(|e| failed(checker, anchor, e))
}

/// One transport instance with everything the checkers need.
pub(crate) struct Instance<'a> {
    pub mu: &'a DiscreteMeasure,
    pub nu: &'a DiscreteMeasure,
    pub result: &'a TransportResult,
    pub spread: &'a SpreadReport,
}

pub(crate) fn duality_report(res: &TransportResult) -> VerificationReport {
    let mut r = VerificationReport::new(
        "duality",
        "strong duality and c-convexity of the tightened potentials",
        res.plan.rows + res.plan.cols,
        res.gap,
        1e-8,
    )
    .with_config(serde_json::json!({
        "primal": res.primal,
        "dual": res.dual,
        "cconvex_residual": res.duals.cconvex_residual,
        "support_slack": res.duals.support_slack,
        "infeasibility": res.duals.infeasibility,
        "solver": res.stats.solver,
    }));
    if res.stats.solver == "exact" && res.duals.cconvex_residual > 1e-12 {
        r.pass = false;
        r = r.note("u differs from its double c-transform");
    }
    r
}

/// Transport-level checkers: stay-away, threshold, Lipschitz bound with
/// nonsplitting, and the Hölder fit.
pub(crate) fn transport_checks(
    ctx: &BodyContext,
    inst: &Instance<'_>,
    toggles: &CheckerToggles,
    deltas: &[f64],
) -> Vec<VerificationReport> {
    let body = &ctx.body;
    let n = ctx.n();
    let xs = inst.mu.positions();
    let ys = inst.nu.positions();
    let res = inst.result;
    let mut out = Vec::new();

    let rho0 = inst.mu.rho_min.min(inst.nu.rho_min);
    let constant =
        if n >= 2 { stay_away_constant(n, ctx.metrics.diam, ctx.cone_half.conerad, rho0).ok() } else { None };
    const NO_CONSTANT: &str = "the constant needs n >= 2";
    if toggles.stay_away_constant {
        out.push(match &constant {
            Some(c) => c.report(),
            None => skipped("stay_away_constant", "stay-away constant", NO_CONSTANT),
        });
    }
    if toggles.stay_away {
        out.push(match &constant {
            Some(c) => or_failed(
                "stay_away",
                "stay-away estimate for same-side pairs",
                stay_away_check(body, &xs, &ys, &res.plan, res.w2, c.value).map(|s| s.report()),
            ),
            None => skipped("stay_away", "stay-away estimate for same-side pairs", NO_CONSTANT),
        });
    }
    if toggles.threshold {
        out.push(match &constant {
            Some(c) => or_failed(
                "threshold",
                "smallness threshold on W2",
                threshold_eval(
                    n,
                    ctx.cone_3536.conerad,
                    c.value,
                    ctx.metrics.geodesic_ratio,
                    ctx.metrics.radial_lipschitz,
                    Some(res.w2),
                )
                .map(|t| t.report()),
            ),
            None => skipped("threshold", "smallness threshold on W2", NO_CONSTANT),
        });
    }
    if toggles.potential_lipschitz {
        let anchor = "Lipschitz bound on the dual potential and nonsplitting";
        let r = GeodesicGraph::build(&xs, GEODESIC_K)
            .and_then(|g| potential_lipschitz_check(&g, &res.duals.u, ctx.metrics.diam))
            .map(|mut chk| {
                chk.nonsplitting = nonsplitting_scan(
                    &xs,
                    &ys,
                    &res.duals,
                    chk.l_hat,
                    ctx.cone_half.conerad,
                    ctx.metrics.geodesic_ratio,
                    deltas,
                );
                chk.report()
            });
        out.push(or_failed("potential_lipschitz", anchor, r));
    }
    if toggles.holder_fit {
        let anchor = "Hölder regularity of the transport map";
        let scale = 3.0 * mean_spacing(&xs);
        out.push(match holder_fit(&xs, &ys, &res.plan, inst.spread.max_spread, scale, ctx.metrics.diam, 5000) {
            Ok(f) => f.report(),
            Err(otsurf::Error::PlanNotMapLike { .. }) => skipped("holder_fit", anchor, "plan is not map-like"),
            Err(e) => failed("holder_fit", anchor, e),
        });
    }
    out
}

/// Section convexity, section locality and the c-cone on the LP potential
/// of one instance.
pub(crate) fn section_checks(
    ctx: &BodyContext,
    inst: &Instance<'_>,
    sampling: &SurfaceSampling,
    toggles: &CheckerToggles,
) -> Vec<VerificationReport> {
    let body = &ctx.body;
    let xs = inst.mu.positions();
    let ys = inst.nu.positions();
    let u = &inst.result.duals.u;
    let spacing = sampling.spacing();
    let mut out = Vec::new();

    // Source nearest a generic point and its heaviest target.
    let p = ctx.generic_point();
    let i0 = (0..xs.len()).min_by(|&a, &b| (xs[a] - p).norm().total_cmp(&(xs[b] - p).norm())).unwrap_or(0);
    let j0 = inst.result.plan.entries.iter().filter(|e| e.0 == i0).max_by(|a, b| a.2.total_cmp(&b.2)).map(|e| e.1);
    let Some(j0) = j0 else {
        for (c, a) in [
            ("section_convexity", "projected sections are convex"),
            ("section_locality", "small sections stay near their slope point"),
            ("c_cone", "c-cone lies below the supporting function"),
        ] {
            out.push(failed(c, a, "source carries no mass"));
        }
        return out;
    };
    let (x0, xb0) = (xs[i0], ys[j0]);
    // Sections a few spacings across, but short of where the normals turn.
    let h = (18.0 * spacing * spacing).min(ctx.cone_half.conerad.powi(2));

    let section = SectionSpec::height(x0, xb0, h)
        .and_then(|spec| section_extract(body, &xs, u, u[i0], &spec, spacing).map(|s| (spec, s)));
    if toggles.section_convexity {
        out.push(match &section {
            Ok((_, s)) => s.report().with_config(serde_json::json!({
                "height": h, "members": s.members.len(), "same_side": s.same_side, "level": s.level
            })),
            Err(e) => failed("section_convexity", "projected sections are convex", e),
        });
    }
    if toggles.section_locality {
        let heights: Vec<f64> = (0..8).map(|k| 1e-3 * 2f64.powi(k)).collect();
        out.push(or_failed(
            "section_locality",
            "small sections stay near their slope point",
            section_locality_check(body, &xs, u, u[i0], &x0, &xb0, 0.3, &heights).map(|r| r.report()),
        ));
    }
    if toggles.c_cone {
        let anchor = "c-cone lies below the supporting function";
        out.push(match &section {
            Ok((spec, s)) => {
                let mut pts: Vec<Vec3> = s.members.iter().map(|&i| xs[i]).collect();
                pts.push(x0);
                match c_cone_eval(&pts[..pts.len() - 1], &x0, u[i0], spec, &ys, &pts) {
                    Ok(k) => {
                        let m = pts.len() - 1;
                        let above =
                            (0..m).map(|i| k.values[i] - spec.m0(&pts[i], u[i0])).fold(f64::NEG_INFINITY, f64::max);
                        let apex = (k.values[m] - u[i0]).abs();
                        VerificationReport::new("c_cone", anchor, m, above.max(apex), 1e-12 * body.diam().powi(2))
                            .with_config(serde_json::json!({
                                "admissible": k.admissible.len(),
                                "candidates": ys.len(),
                                "above_m0": above,
                                "apex_error": apex,
                            }))
                    }
                    Err(e) => failed("c_cone", anchor, e),
                }
            }
            Err(e) => failed("c_cone", anchor, e),
        });
    }
    out
}

/// Local-to-global on a two-slope synthetic potential at a generic point.
pub(crate) fn local_to_global(ctx: &BodyContext, samples: &SurfaceSampling) -> VerificationReport {
    let anchor = "local subdifferential lifts into the global one";
    let body = &ctx.body;
    let x0 = ctx.generic_point();
    let s = 0.5 * ctx.cone_3536.conerad;
    let r = TangentChart::at(body, &x0).and_then(|chart| {
        let (a, b) = if ctx.n() == 1 {
            (Vector2::new(s, 0.0), Vector2::new(-s, 0.0))
        } else {
            (Vector2::new(s, 0.0), Vector2::new(0.0, s))
        };
        let z1 = chart.exp(&a)?.x;
        let z2 = chart.exp(&b)?.x;
        let u = SyntheticPotential::through(&x0, 0.0, vec![z1, z2])?;
        local_to_global_check(body, &u, &x0, &samples.positions(), samples.spacing())
    });
    or_failed("local_to_global", anchor, r.map(|l| l.report()))
}

/// Lower Aleksandrov estimate on a vertex section at a generic point,
/// with sizes scaled to `conerad(1/2)`.
pub(crate) fn lower_aleksandrov(ctx: &BodyContext, count: usize, seed: u64) -> VerificationReport {
    let body = &ctx.body;
    let ch = ctx.cone_half.conerad_safe;
    let n = ctx.n();
    let params = VertexSectionParams {
        x_star: ctx.generic_point(),
        slope_radius: 0.05 * ch,
        rotation: 0.4,
        weights: vec![1.0 / (n + 1) as f64; n + 1],
        value: 0.0,
        height: 0.004 * ch * ch,
        confinement: Confinement::Lift { cut_depth: 0.02 },
    };
    let r = vertex_section(body, &params).and_then(|vs| {
        let src = vs.sources(body, count, 800, seed)?;
        let tgt = vs.targets(body, count, 800, seed ^ 1)?;
        lower_aleksandrov_check(body, &vs.potential, &vs.spec, &src, &tgt, None, THETA_ALEKSANDROV, ch)
    });
    or_failed("lower_aleksandrov", "lower Aleksandrov estimate with constant theta/4", r.map(|l| l.report()))
}

/// Upper Aleksandrov implied constant on a floored vertex section.
pub(crate) fn upper_aleksandrov(ctx: &BodyContext, count: usize, seed: u64) -> VerificationReport {
    let body = &ctx.body;
    let cr = ctx.cone_3536.conerad_safe;
    let r = cr / 8.0;
    let n = ctx.n();
    let x_star = ctx.generic_point();
    let params = VertexSectionParams {
        x_star,
        slope_radius: 0.3 * r,
        rotation: 0.3,
        weights: vec![1.0 / (n + 1) as f64; n + 1],
        value: 0.1 * r * r,
        height: 0.1 * r * r,
        confinement: Confinement::Floor,
    };
    let out = vertex_section(body, &params).and_then(|vs| {
        let src = vs.sources(body, count, 1000, seed)?;
        let tgt = vs.targets(body, count, 1000, seed ^ 1)?;
        upper_aleksandrov_check(body, &vs.potential, &vs.spec, &x_star, &src, &tgt, cr, 8)
    });
    or_failed("upper_aleksandrov", "upper Aleksandrov estimate, implied constant", out.map(|u| u.report()))
}

pub(crate) fn qqconv(ctx: &BodyContext, trials: usize, seed: u64) -> VerificationReport {
    or_failed("qqconv", "quasi-convexity of the cost along c-segments", qqconv_batch(&ctx.body, trials, 33, seed))
}
