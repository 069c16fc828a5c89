use approx::assert_abs_diff_eq;
use nalgebra::Vector2;
use otsurf::geometry::{
    ball_hull, body_metrics, c_segment, cone_inclusion_check, conerad, hausdorff_distance, same_side_set,
    tangent_project,
};
use otsurf::{ConvexBody, Error, ShapeSpec, TangentChart, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sphere() -> ConvexBody {
    ConvexBody::unit_sphere()
}

#[test]
fn normals_of_simple_bodies() {
    let n = sphere().normal_at(&Vec3::z()).unwrap().normal;
    assert_abs_diff_eq!((n - Vec3::z()).norm(), 0.0, epsilon = 1e-12);

    let ball = ConvexBody::ball(2, Vec3::new(1.0, 0.0, 0.0), 2.0).unwrap();
    let n = ball.normal_at(&Vec3::new(3.0, 0.0, 0.0)).unwrap().normal;
    assert_abs_diff_eq!((n - Vec3::x()).norm(), 0.0, epsilon = 1e-12);

    let st = ConvexBody::stadium(1.0, 0.5).unwrap();
    let n = st.normal_at(&Vec3::new(0.0, 0.5, 0.0)).unwrap().normal;
    assert_abs_diff_eq!((n - Vec3::y()).norm(), 0.0, epsilon = 1e-12);
}

#[test]
fn off_boundary_points_are_rejected() {
    let err = sphere().normal_at(&Vec3::new(0.0, 0.0, 0.5)).unwrap_err();
    assert!(matches!(err, Error::PointOffBoundary { .. }));
}

#[test]
fn tangent_projection_on_sphere() {
    let s = sphere();
    let p = tangent_project(&s, &Vec3::z(), &Vec3::x()).unwrap();
    assert_abs_diff_eq!(p.norm(), 1.0, epsilon = 1e-12);
    let chart = TangentChart::at(&s, &Vec3::z()).unwrap();
    let (e1, e2) = chart.frame();
    assert_abs_diff_eq!(p.x, e1.x, epsilon = 1e-12);
    assert_abs_diff_eq!(p.y, e2.x, epsilon = 1e-12);
    let q = tangent_project(&s, &Vec3::z(), &Vec3::new(0.6, 0.0, 0.8)).unwrap();
    assert_abs_diff_eq!(q.norm(), 0.6, epsilon = 1e-12);
    let z = tangent_project(&s, &Vec3::z(), &Vec3::z()).unwrap();
    assert_abs_diff_eq!(z.norm(), 0.0, epsilon = 1e-15);
}

#[test]
fn sphere_chart_height_function() {
    let s = sphere();
    let chart = TangentChart::at(&s, &Vec3::z()).unwrap();
    let b = chart.beta(&Vector2::new(0.6, 0.0)).unwrap();
    assert_abs_diff_eq!(b, -0.2, epsilon = 1e-10);
    assert_abs_diff_eq!(chart.beta(&Vector2::zeros()).unwrap(), 0.0, epsilon = 1e-12);
    for r in [0.1, 0.3, 0.5, 0.9] {
        let p: Vector2<f64> = Vector2::new(0.3 * r, -0.7 * r);
        let exact = (1.0 - p.norm_squared()).sqrt() - 1.0;
        assert_abs_diff_eq!(chart.beta(&p).unwrap(), exact, epsilon = 1e-10);
    }
}

#[test]
fn stadium_chart_is_flat_on_the_face() {
    let st = ConvexBody::stadium(1.0, 0.5).unwrap();
    let chart = TangentChart::at(&st, &Vec3::new(0.0, 0.5, 0.0)).unwrap();
    for s in [-0.9, -0.5, 0.0, 0.4, 0.95] {
        let b = chart.beta(&Vector2::new(s, 0.0)).unwrap();
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-10);
    }
}

#[test]
fn exponential_map_on_sphere() {
    let s = sphere();
    let chart = TangentChart::at(&s, &Vec3::z()).unwrap();
    let (e1, _) = chart.frame();
    let p = chart.project(&(Vec3::z() + e1 * 0.6));
    let x = chart.exp(&p).unwrap().x;
    let expect = e1 * 0.6 + Vec3::z() * 0.8;
    assert_abs_diff_eq!((x - expect).norm(), 0.0, epsilon = 1e-10);
    let base = chart.exp(&Vector2::zeros()).unwrap().x;
    assert_abs_diff_eq!((base - Vec3::z()).norm(), 0.0, epsilon = 1e-12);
}

#[test]
fn exponential_map_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for body in [sphere(), ConvexBody::rounded_box([1.0, 0.8, 0.6], 0.4).unwrap()] {
        let x0 = body.boundary_point(&Vec3::new(0.2, -0.4, 0.9).normalize()).x;
        let chart = TangentChart::at(&body, &x0).unwrap();
        for _ in 0..100 {
            let p = Vector2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
            let x = chart.exp(&p).unwrap().x;
            let q = tangent_project(&body, &x0, &x).unwrap();
            assert_abs_diff_eq!((q - p).norm(), 0.0, epsilon = 1e-9);
        }
    }
}

#[test]
fn exponential_map_rejects_points_outside_the_domain() {
    let s = sphere();
    let chart = TangentChart::at(&s, &Vec3::z()).unwrap();
    assert!(matches!(chart.exp(&Vector2::new(1.5, 0.0)), Err(Error::OutsideChartDomain)));
}

#[test]
fn c_segment_endpoints_and_midpoint() {
    let s = sphere();
    let chart = TangentChart::at(&s, &Vec3::z()).unwrap();
    let a = Vec3::new(0.6, 0.0, 0.8);
    let b = Vec3::new(-0.6, 0.0, 0.8);
    assert_abs_diff_eq!((c_segment(&chart, &a, &b, 0.0).unwrap().x - a).norm(), 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!((c_segment(&chart, &a, &b, 1.0).unwrap().x - b).norm(), 0.0, epsilon = 1e-10);
    let mid = c_segment(&chart, &a, &b, 0.5).unwrap().x;
    assert_abs_diff_eq!((mid - Vec3::z()).norm(), 0.0, epsilon = 1e-10);
}

#[test]
fn c_segment_projects_linearly() {
    let body = ConvexBody::rounded_box([1.0, 0.8, 0.6], 0.4).unwrap();
    let x0 = body.boundary_point(&Vec3::new(0.3, 0.2, 1.0).normalize()).x;
    let chart = TangentChart::at(&body, &x0).unwrap();
    let a = chart.exp(&Vector2::new(0.2, -0.1)).unwrap().x;
    let b = chart.exp(&Vector2::new(-0.15, 0.25)).unwrap().x;
    let (pa, pb) = (chart.project(&a), chart.project(&b));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let t: f64 = rng.gen();
        let x = c_segment(&chart, &a, &b, t).unwrap().x;
        let p = chart.project(&x);
        assert_abs_diff_eq!((p - (pa * (1.0 - t) + pb * t)).norm(), 0.0, epsilon = 1e-10);
    }
}

#[test]
fn c_segment_needs_same_side_endpoints() {
    let s = sphere();
    let chart = TangentChart::at(&s, &Vec3::z()).unwrap();
    let r = c_segment(&chart, &Vec3::new(0.6, 0.0, 0.8), &(-Vec3::z()), 0.5);
    assert!(matches!(r, Err(Error::NotSameSide)));
}

#[test]
fn cone_radius_of_balls() {
    let s = sphere();
    let half = conerad(&s, 0.5, 1500, 3).unwrap();
    assert_abs_diff_eq!(half.conerad, 1.0, epsilon = 0.02);
    let tight = conerad(&s, 35.0 / 36.0, 1500, 3).unwrap();
    assert_abs_diff_eq!(tight.conerad, (1.0f64 / 18.0).sqrt(), epsilon = 0.01);
    let big = ConvexBody::ball(2, Vec3::zeros(), 2.0).unwrap();
    assert_abs_diff_eq!(conerad(&big, 0.5, 1500, 3).unwrap().conerad, 2.0, epsilon = 0.04);
    assert!(half.conerad_safe < half.conerad);
}

#[test]
fn cone_inclusion() {
    let s = sphere();
    let params = conerad(&s, 0.5, 1000, 1).unwrap();
    for w in [Vec3::z(), Vec3::new(1.0, 1.0, -0.3).normalize()] {
        let c = cone_inclusion_check(&s, &w, &params, 500, 2).unwrap();
        assert!(c.pass, "worst margin {}", c.worst_margin);
    }
    let narrow = conerad(&s, 0.999, 1000, 1).unwrap();
    assert!(cone_inclusion_check(&s, &Vec3::x(), &narrow, 500, 3).unwrap().pass);
}

#[test]
fn lens_is_not_c1() {
    let lens = ConvexBody::lens(2, 5.0).unwrap();
    assert!(matches!(conerad(&lens, 0.5, 500, 1), Err(Error::NotC1)));
    let s = sphere();
    let params = conerad(&s, 0.5, 500, 1).unwrap();
    let rim = lens.boundary_point(&Vec3::x());
    assert!(matches!(cone_inclusion_check(&lens, &rim.x, &params, 10, 1), Err(Error::NotC1)));
}

#[test]
fn metrics_of_balls() {
    let m = body_metrics(&sphere(), 1500, 5).unwrap();
    assert_abs_diff_eq!(m.diam, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(m.inradius, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(m.outradius, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(m.geodesic_ratio, std::f64::consts::FRAC_PI_2, epsilon = 0.05);
    assert_abs_diff_eq!(m.radial_lipschitz, 1.0, epsilon = 0.05);

    let big = body_metrics(&ConvexBody::ball(2, Vec3::zeros(), 2.0).unwrap(), 1500, 5).unwrap();
    assert_abs_diff_eq!(big.diam, 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(big.geodesic_ratio, std::f64::consts::FRAC_PI_2, epsilon = 0.05);

    let b = body_metrics(&ConvexBody::rounded_box([1.0, 0.8, 0.6], 0.4).unwrap(), 1000, 5).unwrap();
    assert!(b.inradius <= b.outradius);
    assert!(b.radial_lipschitz >= 1.0);
}

#[test]
fn hausdorff_of_balls() {
    let s = sphere();
    assert_abs_diff_eq!(hausdorff_distance(&s, &s, 500), 0.0, epsilon = 1e-12);
    let big = ConvexBody::ball(2, Vec3::zeros(), 1.1).unwrap();
    assert_abs_diff_eq!(hausdorff_distance(&s, &big, 500), 0.1, epsilon = 1e-3);
    let shifted = ConvexBody::ball(2, Vec3::new(0.03, -0.04, 0.0), 1.0).unwrap();
    assert_abs_diff_eq!(hausdorff_distance(&s, &shifted, 2000), 0.05, epsilon = 2e-3);
}

#[test]
fn ball_hull_of_a_ball_is_the_ball() {
    let s = sphere();
    for r in [2.0, 5.0] {
        let h = ball_hull(&s, r).unwrap();
        assert!(hausdorff_distance(&s, &h, 500) < 1e-6);
    }
}

#[test]
fn ball_hulls_of_the_stadium_shrink_towards_it() {
    let st = ConvexBody::stadium(1.0, 0.5).unwrap();
    let mut last = f64::INFINITY;
    for r in [4.0, 8.0, 16.0, 32.0] {
        let h = ball_hull(&st, r).unwrap();
        let d = hausdorff_distance(&st, &h, 2000);
        assert!(d < last, "R={r}: {d} not below {last}");
        last = d;
        for w in otsurf::geometry::direction_grid(1, 200) {
            let x = st.boundary_point(&w).x;
            assert!(h.level(&x) <= 1e-8);
        }
    }
}

#[test]
fn ball_hull_radius_floor() {
    let st = ConvexBody::stadium(1.0, 0.5).unwrap();
    assert!(matches!(ball_hull(&st, 0.5), Err(Error::RadiusTooSmall { .. })));
}

#[test]
fn same_side_membership() {
    let s = sphere();
    let pts = [Vec3::z(), -Vec3::z(), Vec3::new(0.6, 0.0, 0.8)];
    assert_eq!(same_side_set(&s, &Vec3::z(), 0.5, &pts).unwrap(), vec![true, false, true]);
    assert_eq!(same_side_set(&s, &Vec3::z(), 0.9, &pts).unwrap(), vec![true, false, false]);
    assert_eq!(same_side_set(&s, &Vec3::z(), 0.0, &pts[1..2]).unwrap(), vec![false]);
}

#[test]
fn shape_specs_round_trip_through_json() {
    let spec = ShapeSpec::BallHull {
        base: Box::new(ShapeSpec::Stadium2d { half_length: 1.0, cap_radius: 0.5 }),
        radius: 8.0,
        directions: None,
    };
    let s = serde_json::to_string(&spec).unwrap();
    let back: ShapeSpec = serde_json::from_str(&s).unwrap();
    assert_eq!(back, spec);
    let lens: ShapeSpec = serde_json::from_str(r#"{"shape":"lens","R":5.0}"#).unwrap();
    assert_eq!(lens, ShapeSpec::Lens { big_r: 5.0, n: 2 });
    assert!(serde_json::from_str::<ShapeSpec>(r#"{"shape":"lens","R":5.0,"bogus":1}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_points_lie_on_the_boundary(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let w = Vec3::new(x, y, z);
        prop_assume!(w.norm() > 1e-3);
        let w = w.normalize();
        for body in [ConvexBody::rounded_box([1.0, 0.8, 0.6], 0.4).unwrap(), ConvexBody::ellipsoid(&[1.0, 0.7, 0.5]).unwrap()] {
            let p = body.boundary_point(&w);
            prop_assert!(body.level(&p.x).abs() < 1e-9);
            prop_assert!((p.normal.norm() - 1.0).abs() < 1e-12);
            // Supporting hyperplane: every boundary point is below it.
            let h = p.normal.dot(&p.x);
            prop_assert!((body.support(&p.normal) - h).abs() < 1e-6);
        }
    }

    #[test]
    fn chart_round_trip(a in -0.25f64..0.25, b in -0.25f64..0.25) {
        let body = ConvexBody::ellipsoid(&[1.0, 0.7, 0.5]).unwrap();
        let x0 = body.boundary_point(&Vec3::new(0.1, 0.5, 0.8).normalize()).x;
        let chart = TangentChart::at(&body, &x0).unwrap();
        let p = Vector2::new(a, b);
        let x = chart.exp(&p).unwrap().x;
        prop_assert!((chart.project(&x) - p).norm() < 1e-9);
    }
}
