//! Smooth-kNN calibration and the symmetric fuzzy simplicial set.

use alloc::vec::Vec;

use super::KnnGraph;

const BISECTION_TOL: f64 = 1e-5;
const BISECTION_MAX_ITER: usize = 64;
/// Smallest allowed bandwidth, as a fraction of the mean neighbour distance.
const MIN_SIGMA_SCALE: f64 = 1e-3;

/// Per-node offsets and bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Distance to the nearest neighbour.
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Nodes whose bandwidth was set by the lower clamp instead of the
    /// membership-mass equation.
    pub clamped: Vec<bool>,
}

/// `sum_j exp(-max(0, d_j - rho) / sigma)`
pub fn membership_mass(distances: &[f64], rho: f64, sigma: f64) -> f64 {
    distances.iter().map(|&d| libm::exp(-(d - rho).max(0.0) / sigma)).sum()
}

/// Finds, per node, `sigma` such that the membership mass equals
/// `log2(k)`. When the zero-shifted neighbours alone already reach the target
/// no bandwidth can satisfy it and the lower clamp is used.
pub fn calibrate_smooth_knn(graph: &KnnGraph) -> Calibration {
    let n = graph.n();
    let target = libm::log2(graph.k() as f64);
    let mut rho = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut clamped = Vec::with_capacity(n);
    for i in 0..n {
        let d = graph.distances(i);
        let r = d.first().copied().unwrap_or(0.0);
        let mean = d.iter().sum::<f64>() / d.len().max(1) as f64;
        let floor = if mean > 0.0 { MIN_SIGMA_SCALE * mean } else { MIN_SIGMA_SCALE };
        let at_zero = d.iter().filter(|&&x| x - r <= 0.0).count() as f64;
        let (s, c) = if at_zero >= target {
            (floor, true)
        } else {
            let s = bisect_sigma(d, r, target);
            if s < floor {
                (floor, true)
            } else {
                (s, false)
            }
        };
        rho.push(r);
        sigma.push(s);
        clamped.push(c);
    }
    Calibration { rho, sigma, clamped }
}

fn bisect_sigma(d: &[f64], rho: f64, target: f64) -> f64 {
    let (mut lo, mut hi, mut mid) = (0.0, f64::INFINITY, 1.0);
    for _ in 0..BISECTION_MAX_ITER {
        let mass = membership_mass(d, rho, mid);
        if (mass - target).abs() < BISECTION_TOL {
            break;
        }
        if mass > target {
            hi = mid;
            mid = 0.5 * (lo + hi);
        } else {
            lo = mid;
            mid = if hi == f64::INFINITY { mid * 2.0 } else { 0.5 * (lo + hi) };
        }
    }
    mid
}

/// Probabilistic t-conorm `a + b - a b`.
#[inline]
pub fn fuzzy_union(a: f64, b: f64) -> f64 {
    a + b - a * b
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzyEdge {
    pub i: u32,
    pub j: u32,
    pub weight: f64,
}

/// Undirected weighted graph; each edge stored once with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph {
    n: usize,
    edges: Vec<FuzzyEdge>,
    pub calibration: Calibration,
}

impl FuzzyGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[FuzzyEdge] {
        &self.edges
    }

    /// Weight of `{i, j}`, or `None` if the pair is not an edge.
    pub fn weight(&self, i: u32, j: u32) -> Option<f64> {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search_by(|e| (e.i, e.j).cmp(&key)).ok().map(|pos| self.edges[pos].weight)
    }

    /// Builds a graph from explicit undirected edges; duplicates and
    /// self-loops are rejected, weights must lie in `(0, 1]`.
    pub fn from_edges(n: usize, mut edges: Vec<FuzzyEdge>, calibration: Calibration) -> crate::Result<Self> {
        for e in &mut edges {
            if e.i > e.j {
                core::mem::swap(&mut e.i, &mut e.j);
            }
            if e.i == e.j || e.j as usize >= n || !(e.weight > 0.0 && e.weight <= 1.0) {
                return Err(crate::Error::InvalidArgument(alloc::format!(
                    "invalid fuzzy edge ({}, {}, {})",
                    e.i,
                    e.j,
                    e.weight
                )));
            }
        }
        edges.sort_by_key(|e| (e.i, e.j));
        if edges.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(crate::Error::InvalidArgument("duplicate fuzzy edge".into()));
        }
        Ok(Self { n, edges, calibration })
    }

    /// Connected-component id per node (ids in order of lowest member).
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, e.i as usize);
            let b = find(&mut parent, e.j as usize);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut ids = alloc::vec![usize::MAX; self.n];
        let mut count = 0;
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let root = find(&mut parent, i);
            if ids[root] == usize::MAX {
                ids[root] = count;
                count += 1;
            }
            out.push(ids[root]);
        }
        (count, out)
    }
}

/// Directed memberships `exp(-max(0, d_ij - rho_i) / sigma_i)` merged with the
/// probabilistic t-conorm.
pub fn fuzzy_simplicial_set(graph: &KnnGraph, calibration: Calibration) -> FuzzyGraph {
    // (low, high, weight from low's list, weight from high's list)
    let mut directed: Vec<(u32, u32, f64, f64)> = Vec::with_capacity(graph.n() * graph.k());
    for i in 0..graph.n() {
        let (rho, sigma) = (calibration.rho[i], calibration.sigma[i]);
        for (&j, &d) in graph.neighbors(i).iter().zip(graph.distances(i)) {
            let w = libm::exp(-(d - rho).max(0.0) / sigma);
            if w <= 0.0 {
                continue;
            }
            let i = i as u32;
            if i < j {
                directed.push((i, j, w, 0.0));
            } else {
                directed.push((j, i, 0.0, w));
            }
        }
    }
    directed.sort_by_key(|e| (e.0, e.1));
    let mut edges: Vec<FuzzyEdge> = Vec::with_capacity(directed.len());
    let mut pending: Option<(u32, u32, f64, f64)> = None;
    for (a, b, fw, bw) in directed {
        match pending {
            Some((pa, pb, pf, pbw)) if (pa, pb) == (a, b) => pending = Some((a, b, pf.max(fw), pbw.max(bw))),
            Some((pa, pb, pf, pbw)) => {
                edges.push(FuzzyEdge { i: pa, j: pb, weight: fuzzy_union(pf, pbw) });
                pending = Some((a, b, fw, bw));
            }
            None => pending = Some((a, b, fw, bw)),
        }
    }
    if let Some((a, b, f, w)) = pending {
        edges.push(FuzzyEdge { i: a, j: b, weight: fuzzy_union(f, w) });
    }
    FuzzyGraph { n: graph.n(), edges, calibration }
}
