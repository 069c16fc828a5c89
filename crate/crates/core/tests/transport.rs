use std::sync::Arc;

use approx::assert_abs_diff_eq;
use itertools::Itertools;
use otsurf::geometry::cost;
use otsurf::measures::{make_measure, sample_surface};
use otsurf::transport::{
    c_subdifferential, c_transform, monge_spread, solve, solve_entropic, solve_entropic_points, solve_exact,
    solve_exact_points, tighten, SolverSpec, SPREAD_TAU,
};
use otsurf::{ConvexBody, DensitySpec, DiscreteMeasure, DualPair, Error, TransportPlan, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sphere_pair(n: usize, seed: u64, amp: f64) -> (DiscreteMeasure, DiscreteMeasure) {
    let body = ConvexBody::unit_sphere();
    let a = Arc::new(sample_surface(&body, n, seed).unwrap());
    let b = Arc::new(sample_surface(&body, n, seed + 1).unwrap());
    let mu = make_measure(&a, &DensitySpec::Uniform).unwrap();
    let nu = make_measure(&b, &DensitySpec::Tilt { amplitude: amp, direction: [0.0, 0.3, 1.0] }).unwrap();
    (mu, nu)
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec3>, Vec<f64>) {
    let xs: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()).normalize()).collect();
    let m: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = m.iter().sum();
    (xs, m.iter().map(|x| x / s).collect())
}

#[test]
fn identical_measures_give_the_identity_plan() {
    let body = ConvexBody::unit_sphere();
    let s = Arc::new(sample_surface(&body, 500, 3).unwrap());
    let mu = make_measure(&s, &DensitySpec::Uniform).unwrap();
    let r = solve_exact(&mu, &mu).unwrap();
    assert_abs_diff_eq!(r.w2, 0.0, epsilon = 1e-12);
    assert!(r.plan.entries.iter().all(|&(i, j, _)| i == j));
    assert_eq!(r.plan.entries.len(), 500);
    let (lo, hi) = r.duals.u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi - lo < 1e-12, "u is not constant: spread {}", hi - lo);
}

#[test]
fn two_points_at_distance_d() {
    let d = 0.7;
    let r = solve_exact_points(&[Vec3::zeros()], &[1.0], &[Vec3::new(d, 0.0, 0.0)], &[1.0]).unwrap();
    assert_abs_diff_eq!(r.w2, d / 2f64.sqrt(), epsilon = 1e-14);
    let xs = [Vec3::zeros(), Vec3::y()];
    let ys = [Vec3::new(d, 0.0, 0.0), Vec3::new(d, 1.0, 0.0)];
    let r = solve_exact_points(&xs, &[0.5, 0.5], &ys, &[0.5, 0.5]).unwrap();
    assert_abs_diff_eq!(r.w2, d / 2f64.sqrt(), epsilon = 1e-14);
}

#[test]
fn exact_solver_matches_brute_force_assignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = 6;
        let xs: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let ys: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let w = vec![1.0 / n as f64; n];
        let best = (0..n)
            .permutations(n)
            .map(|p| p.iter().enumerate().map(|(i, &j)| cost(&xs[i], &ys[j])).sum::<f64>() / n as f64)
            .fold(f64::INFINITY, f64::min);
        let r = solve_exact_points(&xs, &w, &ys, &w).unwrap();
        assert_abs_diff_eq!(r.primal, best, epsilon = 1e-13);
    }
}

#[test]
fn duality_and_tightening_on_the_sphere() {
    let (mu, nu) = sphere_pair(400, 5, 0.3);
    let r = solve_exact(&mu, &nu).unwrap();
    assert!(r.gap <= 1e-8, "gap {}", r.gap);
    assert!(r.duals.infeasibility >= -1e-12);
    assert!(r.duals.support_slack <= 1e-8);
    assert!(r.duals.cconvex_residual <= 1e-12);
    assert_abs_diff_eq!(r.duals.u[0], 0.0, epsilon = 0.0);
    assert!(r.plan.marginal_error(&mu.masses, &nu.masses) < 1e-12);
}

#[test]
fn size_limits_and_unbalanced_input() {
    let xs = vec![Vec3::zeros(); 5001];
    let a = vec![1.0 / 5001.0; 5001];
    let r = solve_exact_points(&xs, &a, &[Vec3::zeros()], &[1.0]);
    assert!(matches!(r, Err(Error::SizeExceeded { .. })));
    let r = solve_exact_points(&[Vec3::zeros()], &[1.0], &[Vec3::zeros()], &[0.5]);
    assert!(matches!(r, Err(Error::Unbalanced { .. })));
}

#[test]
fn entropic_limit_on_identical_measures() {
    let body = ConvexBody::unit_sphere();
    let s = Arc::new(sample_surface(&body, 120, 3).unwrap());
    let mu = make_measure(&s, &DensitySpec::Uniform).unwrap();
    let d2 = body.diam().powi(2);
    let w: Vec<f64> =
        [0.1, 0.01, 0.001].iter().map(|e| solve_entropic(&mu, &mu, e * d2, 200_000).unwrap().w2).collect();
    assert!(w[0] > w[1] && w[1] > w[2], "{w:?}");
}

#[test]
fn entropic_calibrates_against_exact() {
    let (mu, nu) = sphere_pair(200, 9, 0.5);
    let exact = solve_exact(&mu, &nu).unwrap();
    let ent = solve_entropic(&mu, &nu, 0.001 * 4.0, 100_000).unwrap();
    assert!((ent.w2 - exact.w2).abs() <= 0.05 * exact.w2, "{} vs {}", ent.w2, exact.w2);
    assert!(ent.stats.marginal_error <= 1e-6);
    let via_spec = solve(&mu, &nu, &SolverSpec::Entropic { epsilon: 0.004, max_iters: 100_000 }).unwrap();
    assert_eq!(via_spec.w2, ent.w2);
}

#[test]
fn entropic_rejects_bad_epsilon() {
    let r = solve_entropic_points(&[Vec3::zeros()], &[1.0], &[Vec3::x()], &[1.0], 0.0, 10);
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
}

#[test]
fn c_transform_examples() {
    let s = sample_surface(&ConvexBody::unit_sphere(), 200, 1).unwrap();
    let xs = s.positions();
    let zero = vec![0.0; xs.len()];
    let uc = c_transform(&zero, &xs, &xs);
    assert!(uc.iter().all(|v| v.abs() < 1e-15));

    let z = 17;
    let u: Vec<f64> = xs.iter().map(|x| -cost(x, &xs[z])).collect();
    let uc = c_transform(&u, &xs, &xs);
    assert_abs_diff_eq!(uc[z], 0.0, epsilon = 1e-15);
    for (j, y) in xs.iter().enumerate() {
        let brute = xs.iter().map(|x| cost(x, &xs[z]) - cost(x, y)).fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(uc[j], brute, epsilon = 1e-14);
    }
}

#[test]
fn c_transform_is_idempotent_after_two_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (xs, _) = random_cloud(&mut rng, 80);
    let (ys, _) = random_cloud(&mut rng, 60);
    let u: Vec<f64> = (0..xs.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let uc = c_transform(&u, &xs, &ys);
    let ucc = c_transform(&uc, &ys, &xs);
    let uccc = c_transform(&ucc, &xs, &ys);
    for (a, b) in uc.iter().zip(&uccc) {
        assert!((a - b).abs() <= 1e-12);
    }
    let (t, v) = tighten(&u, &xs, &ys);
    assert_eq!(t[0], 0.0);
    let again = c_transform(&c_transform(&t, &xs, &ys), &ys, &xs);
    for (a, b) in t.iter().zip(&again) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert_eq!(v.len(), ys.len());
}

#[test]
fn c_subdifferential_examples() {
    let body = ConvexBody::unit_sphere();
    let s = Arc::new(sample_surface(&body, 200, 1).unwrap());
    let mu = make_measure(&s, &DensitySpec::Uniform).unwrap();
    let r = solve_exact(&mu, &mu).unwrap();
    let xs = mu.positions();
    for i in 0..xs.len() {
        assert!(c_subdifferential(&r.duals, &xs, &xs, i, 1e-10).contains(&i));
        assert_eq!(c_subdifferential(&r.duals, &xs, &xs, i, 0.0), vec![i]);
    }

    // Potential equal to the larger of two c-affine functions; points on the
    // crease see both slopes.
    let z1 = Vec3::new(0.6, 0.0, 0.8);
    let z2 = Vec3::new(-0.6, 0.0, 0.8);
    let ys = vec![z1, z2];
    let crease = vec![Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, -0.6, 0.8), Vec3::new(0.5, 0.0, 0.0).normalize()];
    let u: Vec<f64> = crease.iter().map(|x| (-cost(x, &z1)).max(-cost(x, &z2))).collect();
    let v = c_transform(&u, &crease, &ys);
    let duals = DualPair { u, v, infeasibility: 0.0, support_slack: 0.0, cconvex_residual: 0.0 };
    assert_eq!(c_subdifferential(&duals, &crease, &ys, 0, 1e-12), vec![0, 1]);
    assert_eq!(c_subdifferential(&duals, &crease, &ys, 1, 1e-12), vec![0, 1]);
    assert_eq!(c_subdifferential(&duals, &crease, &ys, 2, 1e-12), vec![0]);
}

#[test]
fn spread_examples() {
    let xs = vec![Vec3::zeros(), Vec3::new(5.0, 0.0, 0.0)];
    let diag = TransportPlan { rows: 2, cols: 2, entries: vec![(0, 0, 0.5), (1, 1, 0.5)], cost: 0.0 };
    let r = monge_spread(&diag, &xs, &xs, SPREAD_TAU, None);
    assert_eq!(r.max_spread, 0.0);
    assert_eq!(r.split_mass, 0.0);

    let ys = vec![Vec3::new(0.0, 0.1, 0.0), Vec3::new(1.0, 0.1, 0.0), Vec3::new(5.0, 0.0, 0.0)];
    let plan = TransportPlan { rows: 2, cols: 3, entries: vec![(0, 0, 0.25), (0, 1, 0.25), (1, 2, 0.5)], cost: 0.0 };
    let r = monge_spread(&plan, &xs, &ys, SPREAD_TAU, Some(0.1));
    assert_abs_diff_eq!(r.max_spread, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(r.split_mass, 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(r.spreads[1], 0.0, epsilon = 0.0);
}

#[test]
fn plan_and_duals_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (mu, nu) = sphere_pair(30, 1, 0.2);
    let r = solve_exact(&mu, &nu).unwrap();
    r.plan.write_csv(&dir.path().join("plan.csv")).unwrap();
    r.duals.write_csv(&dir.path().join("u.csv"), &dir.path().join("v.csv")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("i,j,mass"));
    assert_eq!(text.lines().count(), r.plan.entries.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimality_invariants(seed in 0u64..10_000, n in 5usize..60, m in 5usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (xs, a) = random_cloud(&mut rng, n);
        let (ys, b) = random_cloud(&mut rng, m);
        let r = solve_exact_points(&xs, &a, &ys, &b).unwrap();
        // Strong duality and c-convexity.
        prop_assert!(r.gap <= 1e-8);
        prop_assert!(r.duals.cconvex_residual <= 1e-12);
        // Support inside the c-subdifferential.
        for &(i, j, g) in &r.plan.entries {
            if g > 0.0 {
                prop_assert!(r.duals.u[i] + r.duals.v[j] + cost(&xs[i], &ys[j]) <= 1e-8);
            }
        }
        // Cyclical monotonicity on support pairs.
        let e = &r.plan.entries;
        for _ in 0..200 {
            let (i, j, _) = e[rng.gen_range(0..e.len())];
            let (k, l, _) = e[rng.gen_range(0..e.len())];
            let lhs = cost(&xs[i], &ys[j]) + cost(&xs[k], &ys[l]);
            let rhs = cost(&xs[i], &ys[l]) + cost(&xs[k], &ys[j]);
            prop_assert!(lhs <= rhs + 1e-8);
        }
        // Symmetry.
        let back = solve_exact_points(&ys, &b, &xs, &a).unwrap();
        prop_assert!((back.w2 - r.w2).abs() <= 1e-10);
    }
}
