//! Log-domain Sinkhorn iterations with epsilon annealing.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::cost;
use crate::Vec3;

pub(crate) struct SinkhornOutput {
    /// Dense plan, row-major.
    pub plan: Vec<f64>,
    pub f: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn logsumexp(vals: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = vals.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Entropic transport between `(xs, a)` and `(ys, b)`; stops once the L1 row
/// marginal error drops below `tol`.
pub(crate) fn sinkhorn(
    xs: &[Vec3],
    a: &[f64],
    ys: &[Vec3],
    b: &[f64],
    eps: f64,
    max_iters: usize,
    tol: f64,
) -> Result<SinkhornOutput> {
    let (rows, cols) = (xs.len(), ys.len());
    let c: Vec<f64> = xs.iter().flat_map(|x| ys.iter().map(move |y| cost(x, y))).collect();
    let cmax = c.iter().cloned().fold(0.0, f64::max);
    let la: Vec<f64> = a.iter().map(|v| v.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|v| v.ln()).collect();
    let mut f = vec![0.0; rows];
    let mut g = vec![0.0; cols];

    let update = |f: &mut Vec<f64>, g: &mut Vec<f64>, e: f64| {
        f.par_iter_mut().enumerate().for_each(|(i, fi)| {
            *fi = -e * logsumexp((0..cols).map(|j| lb[j] + (g[j] - c[i * cols + j]) / e));
        });
        g.par_iter_mut().enumerate().for_each(|(j, gj)| {
            *gj = -e * logsumexp((0..rows).map(|i| la[i] + (f[i] - c[i * cols + j]) / e));
        });
    };
    let row_error = |f: &[f64], g: &[f64]| -> f64 {
        (0..rows)
            .into_par_iter()
            .map(|i| {
                let s: f64 = (0..cols).map(|j| (la[i] + lb[j] + (f[i] + g[j] - c[i * cols + j]) / eps).exp()).sum();
                (s - a[i]).abs()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    };

    let mut e = cmax.max(eps);
    let mut iterations = 0;
    while e > eps {
        for _ in 0..10 {
            update(&mut f, &mut g, e);
            iterations += 1;
        }
        e = (e * 0.5).max(eps);
        if e == eps {
            break;
        }
    }
    let mut residual = f64::INFINITY;
    while iterations < max_iters {
        update(&mut f, &mut g, eps);
        iterations += 1;
        if iterations % 10 == 0 {
            residual = row_error(&f, &g);
            if residual <= tol {
                break;
            }
        }
    }
    if residual > tol {
        residual = row_error(&f, &g);
        if residual > tol {
            return Err(Error::NotConverged(max_iters));
        }
    }
    let plan: Vec<f64> = (0..rows * cols)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / cols, k % cols);
            (la[i] + lb[j] + (f[i] + g[j] - c[k]) / eps).exp()
        })
        .collect();
    Ok(SinkhornOutput { plan, f, iterations, residual })
}
