//! Primal network simplex on the complete bipartite transport graph.
//!
//! Spanning-tree bookkeeping (thread order, subtree sizes, last successors)
//! follows the classic LEMON implementation. Real arcs are implicit,
//! `a = i * cols + j`; one artificial arc per node joins it to an extra
//! root. Flow is stored per node on the arc to its tree parent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::cost;
use crate::Vec3;

const TREE: i8 = 0;
const LOWER: i8 = 1;
const UP: i8 = 1;
const DOWN: i8 = -1;
const NONE: usize = usize::MAX;

/// Largest arc count for which the cost matrix is cached.
const DENSE_LIMIT: usize = 1500 * 1500;

pub(crate) struct Costs<'a> {
    xs: &'a [Vec3],
    ys: &'a [Vec3],
    dense: Option<Vec<f64>>,
}

impl<'a> Costs<'a> {
    pub(crate) fn new(xs: &'a [Vec3], ys: &'a [Vec3]) -> Self {
        let dense = (xs.len() * ys.len() <= DENSE_LIMIT)
            .then(|| xs.iter().flat_map(|x| ys.iter().map(move |y| cost(x, y))).collect());
        Self { xs, ys, dense }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        match &self.dense {
            Some(d) => d[i * self.ys.len() + j],
            None => cost(&self.xs[i], &self.ys[j]),
        }
    }
}

pub(crate) struct SimplexOutput {
    pub flows: Vec<(usize, usize, f64)>,
    pub pi: Vec<f64>,
    pub pivots: usize,
}

struct Simplex<'a> {
    rows: usize,
    cols: usize,
    arcs: usize,
    costs: Costs<'a>,
    eps: f64,
    art_src: Vec<usize>,
    art_tgt: Vec<usize>,
    art_c: Vec<f64>,
    state: Vec<i8>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    pred_flow: Vec<f64>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pi: Vec<f64>,
    dirty_revs: Vec<usize>,
    block: usize,
    next_arc: usize,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
}

impl<'a> Simplex<'a> {
    #[inline]
    fn src(&self, a: usize) -> usize {
        if a < self.arcs {
            a / self.cols
        } else {
            self.art_src[a - self.arcs]
        }
    }

    #[inline]
    fn tgt(&self, a: usize) -> usize {
        if a < self.arcs {
            self.rows + a % self.cols
        } else {
            self.art_tgt[a - self.arcs]
        }
    }

    #[inline]
    fn arc_cost(&self, a: usize) -> f64 {
        if a < self.arcs {
            self.costs.get(a / self.cols, a % self.cols)
        } else {
            self.art_c[a - self.arcs]
        }
    }

    fn new(xs: &'a [Vec3], a: &[f64], ys: &'a [Vec3], b: &[f64]) -> Self {
        let (rows, cols) = (xs.len(), ys.len());
        let nodes = rows + cols;
        let arcs = rows * cols;
        let costs = Costs::new(xs, ys);
        let mut max_cost: f64 = 0.0;
        for x in xs {
            for y in ys {
                max_cost = max_cost.max(cost(x, y));
            }
        }
        let art_cost = (max_cost + 1.0) * nodes as f64;
        let root = nodes;
        let mut s = Simplex {
            rows,
            cols,
            arcs,
            costs,
            eps: 1e-12 * (1.0 + max_cost),
            art_src: vec![0; nodes],
            art_tgt: vec![0; nodes],
            art_c: vec![0.0; nodes],
            state: vec![LOWER; arcs],
            parent: vec![NONE; nodes + 1],
            pred: vec![NONE; nodes + 1],
            pred_dir: vec![0; nodes + 1],
            pred_flow: vec![0.0; nodes + 1],
            thread: vec![0; nodes + 1],
            rev_thread: vec![0; nodes + 1],
            succ_num: vec![0; nodes + 1],
            last_succ: vec![0; nodes + 1],
            pi: vec![0.0; nodes + 1],
            dirty_revs: Vec::new(),
            block: ((arcs as f64).sqrt() as usize).max(10),
            next_arc: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = nodes + 1;
        s.last_succ[root] = root - 1;
        for u in 0..nodes {
            let e = arcs + u;
            let supply = if u < rows { a[u] } else { -b[u - rows] };
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            if supply >= 0.0 {
                s.pred_dir[u] = UP;
                s.pi[u] = 0.0;
                s.art_src[u] = u;
                s.art_tgt[u] = root;
                s.pred_flow[u] = supply;
                s.art_c[u] = 0.0;
            } else {
                s.pred_dir[u] = DOWN;
                s.pi[u] = art_cost;
                s.art_src[u] = root;
                s.art_tgt[u] = u;
                s.pred_flow[u] = -supply;
                s.art_c[u] = art_cost;
            }
        }
        s
    }

    #[inline]
    fn reduced(&self, e: usize) -> f64 {
        let (i, j) = (e / self.cols, e % self.cols);
        self.state[e] as f64 * (self.costs.get(i, j) + self.pi[i] - self.pi[self.rows + j])
    }

    /// Block search over real arcs.
    fn find_entering(&mut self) -> bool {
        let mut min = -self.eps;
        let mut found = false;
        let mut cnt = self.block;
        let mut e = self.next_arc;
        for _ in 0..self.arcs {
            let c = self.reduced(e);
            if c < min {
                min = c;
                self.in_arc = e;
                found = true;
            }
            e += 1;
            if e == self.arcs {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if found {
                    self.next_arc = e;
                    return true;
                }
                cnt = self.block;
            }
        }
        if found {
            self.next_arc = e;
        }
        found
    }

    fn find_join(&mut self) {
        let mut u = self.src(self.in_arc);
        let mut v = self.tgt(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving(&mut self) -> bool {
        let first = self.src(self.in_arc);
        let second = self.tgt(self.in_arc);
        self.delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            let d = if self.pred_dir[u] == UP { self.pred_flow[u].max(0.0) } else { f64::INFINITY };
            if d < self.delta {
                self.delta = d;
                self.u_out = u;
                result = 1;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            let d = if self.pred_dir[u] == DOWN { self.pred_flow[u].max(0.0) } else { f64::INFINITY };
            if d <= self.delta {
                self.delta = d;
                self.u_out = u;
                result = 2;
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    /// Push `delta` around the cycle; returns the entering arc's flow.
    fn change_flow(&mut self) -> f64 {
        let val = self.delta;
        if val > 0.0 {
            let mut u = self.src(self.in_arc);
            while u != self.join {
                self.pred_flow[u] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            let mut u = self.tgt(self.in_arc);
            while u != self.join {
                self.pred_flow[u] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = TREE;
        let out = self.pred[self.u_out];
        if out < self.arcs {
            self.state[out] = LOWER;
        }
        self.pred_flow[self.u_out] = 0.0;
        val
    }

    fn update_tree(&mut self, in_flow: f64) {
        let (u_in, v_in, u_out, join, in_arc) = (self.u_in, self.v_in, self.u_out, self.join, self.in_arc);
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];
        let in_dir = if u_in == self.src(in_arc) { UP } else { DOWN };

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pred_flow[u_in] = in_flow;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in { self.thread[old_last_succ] } else { self.thread[v_in] };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for k in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                self.pred_flow[u] = self.pred_flow[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pred_flow[u_in] = in_flow;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma =
            self.pi[self.v_in] - self.pi[self.u_in] - self.pred_dir[self.u_in] as f64 * self.arc_cost(self.in_arc);
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }
}

/// Optimal flows `(i, j, mass)` and node potentials with
/// `c_ij + pi_i - pi_{rows + j} >= 0`, equality on the tree.
///
/// Rows and columns are visited in a fixed pseudo-random order: the block
/// pivot search stalls on inputs sorted along a curve.
pub(crate) fn network_simplex(
    xs: &[Vec3],
    a: &[f64],
    ys: &[Vec3],
    b: &[f64],
    max_pivots: usize,
) -> Result<SimplexOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut pr: Vec<usize> = (0..xs.len()).collect();
    let mut pc: Vec<usize> = (0..ys.len()).collect();
    pr.shuffle(&mut rng);
    pc.shuffle(&mut rng);
    let xs_p: Vec<Vec3> = pr.iter().map(|&i| xs[i]).collect();
    let a_p: Vec<f64> = pr.iter().map(|&i| a[i]).collect();
    let ys_p: Vec<Vec3> = pc.iter().map(|&j| ys[j]).collect();
    let b_p: Vec<f64> = pc.iter().map(|&j| b[j]).collect();
    let out = simplex_in_order(&xs_p, &a_p, &ys_p, &b_p, max_pivots)?;
    let rows = xs.len();
    let mut pi = vec![0.0; rows + ys.len()];
    for (k, &i) in pr.iter().enumerate() {
        pi[i] = out.pi[k];
    }
    for (k, &j) in pc.iter().enumerate() {
        pi[rows + j] = out.pi[rows + k];
    }
    let mut flows: Vec<(usize, usize, f64)> = out.flows.iter().map(|&(i, j, f)| (pr[i], pc[j], f)).collect();
    flows.sort_by_key(|p| (p.0, p.1));
    Ok(SimplexOutput { flows, pi, pivots: out.pivots })
}

fn simplex_in_order(xs: &[Vec3], a: &[f64], ys: &[Vec3], b: &[f64], max_pivots: usize) -> Result<SimplexOutput> {
    let mut s = Simplex::new(xs, a, ys, b);
    let mut pivots = 0;
    while s.find_entering() {
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::NotConverged(max_pivots));
        }
        s.find_join();
        if !s.find_leaving() || !s.delta.is_finite() {
            return Err(Error::InvalidArgument("transport problem is unbounded".into()));
        }
        let in_flow = s.change_flow();
        s.update_tree(in_flow);
        s.update_potential();
    }
    let nodes = s.rows + s.cols;
    let scale = a.iter().chain(b).cloned().fold(0.0, f64::max);
    let mut flows = Vec::new();
    for u in 0..nodes {
        let e = s.pred[u];
        let f = s.pred_flow[u];
        if e >= s.arcs {
            if f > 1e-9 * scale.max(1e-300) {
                return Err(Error::InvalidArgument("transport problem is infeasible".into()));
            }
            continue;
        }
        if f > 0.0 {
            flows.push((e / s.cols, e % s.cols, f));
        }
    }
    flows.sort_by_key(|p| (p.0, p.1));
    s.pi.truncate(nodes);
    Ok(SimplexOutput { flows, pi: s.pi, pivots })
}

/// Non-tree arcs whose reduced cost is within `tol` of zero: alternative
/// optima may exist when this is nonzero.
pub(crate) fn count_ties(xs: &[Vec3], ys: &[Vec3], pi: &[f64], tree: &[(usize, usize, f64)], tol: f64) -> usize {
    use std::collections::HashSet;
    let rows = xs.len();
    let in_tree: HashSet<(usize, usize)> = tree.iter().map(|&(i, j, _)| (i, j)).collect();
    let mut ties = 0;
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            if (cost(x, y) + pi[i] - pi[rows + j]).abs() <= tol && !in_tree.contains(&(i, j)) {
                ties += 1;
            }
        }
    }
    ties
}
