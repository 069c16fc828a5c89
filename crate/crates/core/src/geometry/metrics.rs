//! Global constants of a body estimated on a boundary sampling.

use petgraph::algo::{connected_components, dijkstra};
use petgraph::graph::{NodeIndex, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{direction_grid, ConvexBody};
use crate::error::{Error, Result};
use crate::measures::sample_surface;
use crate::Vec3;

/// Symmetric k-nearest-neighbour graph on boundary samples with Euclidean
/// edge lengths; shortest paths overestimate intrinsic distance by
/// O(spacing).
#[derive(Clone, Debug)]
pub struct GeodesicGraph {
    points: Vec<Vec3>,
    graph: UnGraph<(), f64>,
    k: usize,
}

/// Indices of the `k` nearest neighbours of every point (brute force).
pub(crate) fn knn(points: &[Vec3], k: usize) -> Vec<Vec<usize>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<(f64, usize)> =
                points.iter().enumerate().filter(|&(j, _)| j != i).map(|(j, q)| ((p - q).norm_squared(), j)).collect();
            let k = k.min(d.len());
            if k == 0 {
                return Vec::new();
            }
            d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.truncate(k);
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

impl GeodesicGraph {
    pub fn build(points: &[Vec3], k: usize) -> Result<Self> {
        if points.len() < 2 || k == 0 {
            return Err(Error::InsufficientSamples("graph needs at least two points".into()));
        }
        let nn = knn(points, k);
        let mut graph = UnGraph::<(), f64>::with_capacity(points.len(), points.len() * k);
        for _ in points {
            graph.add_node(());
        }
        for (i, list) in nn.iter().enumerate() {
            for &j in list {
                let (a, b) = (NodeIndex::new(i), NodeIndex::new(j));
                if graph.find_edge(a, b).is_none() {
                    graph.add_edge(a, b, (points[i] - points[j]).norm());
                }
            }
        }
        if connected_components(&graph) != 1 {
            return Err(Error::InsufficientSamples(format!("{k}-nearest-neighbour graph is disconnected")));
        }
        Ok(Self { points: points.to_vec(), graph, k })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Shortest-path lengths from `source` to every node.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        let map = dijkstra(&self.graph, NodeIndex::new(source), None, |e| *e.weight());
        let mut out = vec![f64::INFINITY; self.points.len()];
        for (node, d) in map {
            out[node.index()] = d;
        }
        out
    }

    /// Undirected edges `(i, j, length)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.graph
            .edge_indices()
            .map(|e| {
                let (a, b) = self.graph.edge_endpoints(e).expect("edge exists");
                let (i, j) = (a.index().min(b.index()), a.index().max(b.index()));
                (i, j, self.graph[e])
            })
            .collect()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.graph.neighbors(NodeIndex::new(i)).map(|n| n.index())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyMetrics {
    pub n: usize,
    pub diam: f64,
    pub inradius: f64,
    pub outradius: f64,
    /// Largest sampled ratio of graph distance to Euclidean distance.
    pub geodesic_ratio: f64,
    /// Sampled bi-Lipschitz constant of the radial projection onto the unit
    /// sphere, at least 1.
    pub radial_lipschitz: f64,
    pub samples: usize,
    pub k: usize,
    /// Mean distance to the nearest neighbour in the sampling.
    pub spacing: f64,
}

/// Default neighbour count of the geodesic graph.
pub const GEODESIC_K: usize = 12;

pub fn body_metrics(body: &ConvexBody, budget: usize, seed: u64) -> Result<BodyMetrics> {
    body_metrics_with(body, budget, GEODESIC_K, seed)
}

pub fn body_metrics_with(body: &ConvexBody, budget: usize, k: usize, seed: u64) -> Result<BodyMetrics> {
    let sampling = sample_surface(body, budget, seed)?;
    let pts: Vec<Vec3> = sampling.points.iter().map(|p| p.x).collect();
    let graph = GeodesicGraph::build(&pts, k)?;
    let spacing = sampling.spacing();

    let sources = 32.min(pts.len());
    let stride = pts.len() / sources;
    let ratio = (0..sources)
        .into_par_iter()
        .map(|s| {
            let i = s * stride;
            let d = graph.distances_from(i);
            let mut best: f64 = 1.0;
            for (j, dj) in d.iter().enumerate() {
                let e = (pts[i] - pts[j]).norm();
                if e > 2.0 * spacing {
                    best = best.max(dj / e);
                }
            }
            best
        })
        .reduce(|| 1.0, f64::max);

    // Radial projection: local ratios on graph edges, where the chord stands
    // in for the intrinsic distance, plus random chords.
    let sphere_dist = |a: &Vec3, b: &Vec3| a.normalize().dot(&b.normalize()).clamp(-1.0, 1.0).acos();
    let mut lip: f64 = 1.0;
    for (i, j, len) in graph.edges() {
        let ds = sphere_dist(&pts[i], &pts[j]);
        if ds > 0.0 && len > 0.0 {
            lip = lip.max(len / ds).max(ds / len);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    for _ in 0..20_000 {
        let i = rng.gen_range(0..pts.len());
        let j = rng.gen_range(0..pts.len());
        let ds = sphere_dist(&pts[i], &pts[j]);
        if ds > 1e-12 {
            lip = lip.max((pts[i] - pts[j]).norm() / ds);
        }
    }

    Ok(BodyMetrics {
        n: body.n(),
        diam: body.diam(),
        inradius: body.inradius(),
        outradius: body.outradius(),
        geodesic_ratio: ratio,
        radial_lipschitz: lip,
        samples: pts.len(),
        k,
        spacing,
    })
}

/// Hausdorff distance between two solid bodies, as the larger of the two
/// one-sided maxima of exact point-to-body distance over boundary samples.
pub fn hausdorff_distance(a: &ConvexBody, b: &ConvexBody, samples: usize) -> f64 {
    let one_sided = |p: &ConvexBody, q: &ConvexBody| {
        direction_grid(p.n(), samples).par_iter().map(|w| q.distance(&p.boundary_point(w).x)).reduce(|| 0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}
