//! Per-shape primitives. Planar bodies live in the `z = 0` plane of R^3.

use crate::Vec3;

#[derive(Clone, Debug)]
pub(crate) enum Core {
    /// Segment `[-a, a] x {0}` along the first axis.
    Segment(f64),
    /// Axis-aligned box with the given half-widths.
    Cuboid(Vec3),
}

#[derive(Clone, Debug)]
pub(crate) enum Shape {
    Ball {
        c: Vec3,
        r: f64,
    },
    /// Semi-axes; the unused third axis of a planar ellipse is set to 1.
    Ellipsoid {
        a: Vec3,
    },
    /// Intersection of `B_r(-off e)` and `B_r(off e)` with `e` the last axis.
    Lens {
        r: f64,
        off: f64,
        axis: usize,
    },
    /// Minkowski sum of a core set and a ball of radius `r`.
    Rounded {
        core: Core,
        r: f64,
    },
    /// Intersection of equal balls.
    Hull {
        centers: Vec<Vec3>,
        r: f64,
    },
}

pub(crate) fn ball_interval(c: &Vec3, r: f64, p: &Vec3, d: &Vec3) -> Option<(f64, f64)> {
    let w = p - c;
    let b = w.dot(d);
    let q = w.norm_squared() - r * r;
    let disc = b * b - q;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

impl Core {
    fn closest(&self, x: &Vec3) -> Vec3 {
        match self {
            Core::Segment(a) => Vec3::new(x.x.clamp(-a, *a), 0.0, 0.0),
            Core::Cuboid(h) => Vec3::new(x.x.clamp(-h.x, h.x), x.y.clamp(-h.y, h.y), x.z.clamp(-h.z, h.z)),
        }
    }

    fn dist(&self, x: &Vec3) -> f64 {
        (x - self.closest(x)).norm()
    }

    fn support(&self, u: &Vec3) -> f64 {
        match self {
            Core::Segment(a) => a * u.x.abs(),
            Core::Cuboid(h) => h.x * u.x.abs() + h.y * u.y.abs() + h.z * u.z.abs(),
        }
    }

    fn farthest(&self, c: &Vec3) -> f64 {
        match self {
            Core::Segment(a) => {
                let v = Vec3::new(-a * c.x.signum(), 0.0, 0.0);
                (c - v).norm()
            }
            Core::Cuboid(h) => {
                let v = Vec3::new(-h.x * sign_or_one(c.x), -h.y * sign_or_one(c.y), -h.z * sign_or_one(c.z));
                (c - v).norm()
            }
        }
    }
}

fn sign_or_one(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn axis_vec(axis: usize) -> Vec3 {
    let mut e = Vec3::zeros();
    e[axis] = 1.0;
    e
}

impl Shape {
    /// Convex function, negative inside, zero on the boundary.
    pub(crate) fn level(&self, x: &Vec3) -> f64 {
        match self {
            Shape::Ball { c, r } => (x - c).norm() - r,
            Shape::Ellipsoid { a } => x.component_div(a).norm() - 1.0,
            Shape::Lens { r, off, axis } => {
                let e = axis_vec(*axis);
                let l1 = (x + e * *off).norm() - r;
                let l2 = (x - e * *off).norm() - r;
                l1.max(l2)
            }
            Shape::Rounded { core, r } => core.dist(x) - r,
            Shape::Hull { centers, r } => {
                let mut m = f64::NEG_INFINITY;
                for c in centers {
                    let v = (x - c).norm_squared();
                    if v > m {
                        m = v;
                    }
                }
                m.sqrt() - r
            }
        }
    }

    /// Parameter interval of `p + t d` inside the body, `d` a unit vector.
    pub(crate) fn line_interval(&self, p: &Vec3, d: &Vec3, scale: f64) -> Option<(f64, f64)> {
        match self {
            Shape::Ball { c, r } => ball_interval(c, *r, p, d),
            Shape::Ellipsoid { a } => {
                let pp = p.component_div(a);
                let dd = d.component_div(a);
                let qa = dd.norm_squared();
                let qb = pp.dot(&dd);
                let qc = pp.norm_squared() - 1.0;
                let disc = qb * qb - qa * qc;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                // Stable root pair.
                let q = -(qb + qb.signum() * s);
                if q == 0.0 {
                    return Some((0.0, 0.0));
                }
                let t1 = q / qa;
                let t2 = qc / q;
                Some((t1.min(t2), t1.max(t2)))
            }
            Shape::Lens { r, off, axis } => {
                let e = axis_vec(*axis);
                let (a1, b1) = ball_interval(&(-e * *off), *r, p, d)?;
                let (a2, b2) = ball_interval(&(e * *off), *r, p, d)?;
                let lo = a1.max(a2);
                let hi = b1.min(b2);
                (lo <= hi).then_some((lo, hi))
            }
            Shape::Hull { centers, r } => {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for c in centers {
                    let (a, b) = ball_interval(c, *r, p, d)?;
                    lo = lo.max(a);
                    hi = hi.min(b);
                    if lo > hi {
                        return None;
                    }
                }
                Some((lo, hi))
            }
            Shape::Rounded { .. } => self.numeric_interval(p, d, scale),
        }
    }

    /// Line interval for shapes without a closed form: golden-section search
    /// for an interior point, then bisection on both sides.
    fn numeric_interval(&self, p: &Vec3, d: &Vec3, scale: f64) -> Option<(f64, f64)> {
        let g = |t: f64| self.level(&(p + d * t));
        let t0 = -p.dot(d);
        let span = scale * 2.0 + 1.0;
        let (mut a, mut b) = (t0 - span, t0 + span);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = g(x1);
        let mut f2 = g(x2);
        let mut inside = None;
        for _ in 0..200 {
            if f1 < 0.0 {
                inside = Some(x1);
                break;
            }
            if f2 < 0.0 {
                inside = Some(x2);
                break;
            }
            if b - a < 1e-15 * span {
                break;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = g(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = g(x2);
            }
        }
        let tin = match inside {
            Some(t) => t,
            None => {
                let t = 0.5 * (a + b);
                if g(t) <= 0.0 {
                    return Some((t, t));
                }
                return None;
            }
        };
        let hi = bisect(&g, tin, t0 + span);
        let lo = bisect(&g, tin, t0 - span);
        Some((lo, hi))
    }

    /// Outward normal at a boundary point plus a uniqueness flag.
    pub(crate) fn normal(&self, x: &Vec3, scale: f64) -> (Vec3, bool) {
        match self {
            Shape::Ball { c, .. } => ((x - c).normalize(), true),
            Shape::Ellipsoid { a } => {
                let g = x.component_div(&a.component_mul(a));
                (g.normalize(), true)
            }
            Shape::Lens { r, off, axis } => {
                let e = axis_vec(*axis);
                let c_top = -e * *off;
                let c_bot = e * *off;
                let l_top = (x - c_top).norm() - r;
                let l_bot = (x - c_bot).norm() - r;
                let n_top = (x - c_top).normalize();
                let n_bot = (x - c_bot).normalize();
                if (l_top - l_bot).abs() <= 1e-9 * scale {
                    ((n_top + n_bot).normalize(), false)
                } else if l_top > l_bot {
                    (n_top, true)
                } else {
                    (n_bot, true)
                }
            }
            Shape::Rounded { core, .. } => {
                let v = x - core.closest(x);
                (v.normalize(), true)
            }
            Shape::Hull { centers, .. } => {
                let mut best = (f64::NEG_INFINITY, 0usize);
                let mut second = f64::NEG_INFINITY;
                let mut second_idx = 0usize;
                for (k, c) in centers.iter().enumerate() {
                    let v = (x - c).norm();
                    if v > best.0 {
                        second = best.0;
                        second_idx = best.1;
                        best = (v, k);
                    } else if v > second {
                        second = v;
                        second_idx = k;
                    }
                }
                let n1 = (x - centers[best.1]).normalize();
                if centers.len() > 1 && best.0 - second <= 1e-9 * scale {
                    let n2 = (x - centers[second_idx]).normalize();
                    if (n1 - n2).norm() > 1e-6 {
                        return ((n1 + n2).normalize(), false);
                    }
                }
                (n1, true)
            }
        }
    }

    /// Euclidean distance from `x` to the solid body.
    pub(crate) fn dist_outside(&self, x: &Vec3) -> f64 {
        match self {
            Shape::Ball { c, r } => ((x - c).norm() - r).max(0.0),
            Shape::Rounded { core, r } => (core.dist(x) - r).max(0.0),
            Shape::Ellipsoid { a } => ellipsoid_distance(a, x),
            Shape::Lens { r, off, axis } => {
                let e = axis_vec(*axis);
                let c1 = -e * *off;
                let c2 = e * *off;
                let in1 = (x - c1).norm() <= *r;
                let in2 = (x - c2).norm() <= *r;
                if in1 && in2 {
                    return 0.0;
                }
                let p1 = if in1 { *x } else { c1 + (x - c1).normalize() * *r };
                if (p1 - c2).norm() <= *r * (1.0 + 1e-14) {
                    return (x - p1).norm();
                }
                let p2 = if in2 { *x } else { c2 + (x - c2).normalize() * *r };
                if (p2 - c1).norm() <= *r * (1.0 + 1e-14) {
                    return (x - p2).norm();
                }
                let rim = (r * r - off * off).max(0.0).sqrt();
                let h = x - e * x.dot(&e);
                let hn = h.norm();
                let q = if hn > 0.0 {
                    h * (rim / hn)
                } else {
                    let mut t = Vec3::zeros();
                    t[if *axis == 0 { 1 } else { 0 }] = rim;
                    t
                };
                (x - q).norm()
            }
            Shape::Hull { centers, r } => hull_distance(centers, *r, x),
        }
    }

    /// Support function `h(u) = max <x, u>` for a unit vector `u`.
    /// Returns `None` for ball hulls, whose support is estimated by sampling.
    pub(crate) fn support(&self, u: &Vec3) -> Option<f64> {
        match self {
            Shape::Ball { c, r } => Some(c.dot(u) + r * u.norm()),
            Shape::Ellipsoid { a } => Some(u.component_mul(a).norm()),
            Shape::Lens { r, off, axis } => {
                let uz = u[*axis].abs();
                let un = u.norm();
                if uz >= off / r * un {
                    Some(r * un - off * uz)
                } else {
                    let rim = (r * r - off * off).sqrt();
                    Some(rim * (un * un - uz * uz).max(0.0).sqrt())
                }
            }
            Shape::Rounded { core, r } => Some(core.support(u) + r * u.norm()),
            Shape::Hull { .. } => None,
        }
    }

    /// Largest distance from `c` to a point of the body, when available in
    /// closed form.
    pub(crate) fn farthest(&self, c: &Vec3) -> Option<f64> {
        match self {
            Shape::Ball { c: center, r } => Some((c - center).norm() + r),
            Shape::Rounded { core, r } => Some(core.farthest(c) + r),
            Shape::Lens { r, off, axis } => {
                // Farthest point of a two-ball intersection lies on a cap or
                // on the rim; both are scanned exactly.
                let e = axis_vec(*axis);
                let rim = (r * r - off * off).sqrt();
                let h = c - e * c.dot(&e);
                let hn = h.norm();
                let dir = if hn > 0.0 { -h / hn } else { first_perp(*axis) };
                let rim_pt = dir * rim;
                let mut best = (c - rim_pt).norm();
                for (cc, sgn) in [(-e * *off, 1.0), (e * *off, -1.0)] {
                    let v = c - cc;
                    if v.norm() > 0.0 {
                        let p = cc - v.normalize() * *r;
                        if sgn * p.dot(&e) >= 0.0 {
                            best = best.max((c - p).norm());
                        }
                    }
                }
                Some(best)
            }
            Shape::Ellipsoid { .. } | Shape::Hull { .. } => None,
        }
    }
}

fn first_perp(axis: usize) -> Vec3 {
    let mut t = Vec3::zeros();
    t[if axis == 0 { 1 } else { 0 }] = 1.0;
    t
}

pub(crate) fn bisect<F: Fn(f64) -> f64>(g: &F, t_in: f64, t_out: f64) -> f64 {
    let (mut a, mut b) = (t_in, t_out);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if g(m) <= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

fn ellipsoid_distance(a: &Vec3, x: &Vec3) -> f64 {
    if x.component_div(a).norm() <= 1.0 {
        return 0.0;
    }
    let a2 = a.component_mul(a);
    let f = |t: f64| {
        let mut s = 0.0;
        for i in 0..3 {
            let v = a[i] * x[i] / (t + a2[i]);
            s += v * v;
        }
        s - 1.0
    };
    let mut hi = x.norm() * a.max() + 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m == lo || m == hi {
            break;
        }
        if f(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let t = 0.5 * (lo + hi);
    let y = Vec3::from_fn(|i, _| a2[i] * x[i] / (t + a2[i]));
    (x - y).norm()
}

/// Dykstra projection onto an intersection of equal balls.
fn hull_distance(centers: &[Vec3], r: f64, x: &Vec3) -> f64 {
    let outside = |p: &Vec3| centers.iter().any(|c| (p - c).norm() > r);
    if !outside(x) {
        return 0.0;
    }
    let active: Vec<usize> = (0..centers.len()).filter(|&k| (x - centers[k]).norm() > r - 1e-3 * r).collect();
    let set: Vec<usize> = if active.is_empty() { (0..centers.len()).collect() } else { active };
    let mut y = *x;
    let mut incs = vec![Vec3::zeros(); set.len()];
    for _ in 0..5000 {
        let prev = y;
        for (s, &k) in set.iter().enumerate() {
            let z = y + incs[s];
            let c = centers[k];
            let v = z - c;
            let p = if v.norm() > r { c + v * (r / v.norm()) } else { z };
            incs[s] = z - p;
            y = p;
        }
        if (y - prev).norm() < 1e-15 * (1.0 + r) {
            break;
        }
    }
    (x - y).norm()
}
