//! k-nearest-neighbour graphs under the Euclidean metric.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::{self, StageRng};
use crate::{Error, FeatureMatrix, Result};

/// Above this many points the graph is built with NN-descent.
pub const EXACT_KNN_LIMIT: usize = 4096;

/// `k` neighbours per node, nearest first, self excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    n: usize,
    k: usize,
    indices: Vec<u32>,
    distances: Vec<f64>,
}

impl KnnGraph {
    /// Validates sortedness, self-exclusion and index bounds.
    pub fn new(n: usize, k: usize, indices: Vec<u32>, distances: Vec<f64>) -> Result<Self> {
        if indices.len() != n * k || distances.len() != n * k {
            return Err(Error::DimensionMismatch { expected: n * k, found: indices.len(), what: "neighbour count" });
        }
        for i in 0..n {
            let idx = &indices[i * k..(i + 1) * k];
            let dist = &distances[i * k..(i + 1) * k];
            if idx.iter().any(|&j| j as usize == i || j as usize >= n) {
                return Err(Error::InvalidArgument(format!("node {i} has a self or out-of-range neighbour")));
            }
            if dist.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) || dist.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "node {i} distances must be finite, non-negative and ascending"
                )));
            }
        }
        Ok(Self { n, k, indices, distances })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }
}

/// Exact search up to [`EXACT_KNN_LIMIT`] points, NN-descent above.
pub fn build_knn(features: &FeatureMatrix, k: usize, seed: u64) -> Result<KnnGraph> {
    check_k(features.n(), k)?;
    if features.n() <= EXACT_KNN_LIMIT {
        exact_knn(features, k)
    } else {
        nn_descent(features, k, seed, &NnDescentParams::default())
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= k < n for a kNN graph, got k={k}, n={n}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    libm::sqrt(s)
}

/// Brute-force scan; ties broken by index.
pub fn exact_knn(features: &FeatureMatrix, k: usize) -> Result<KnnGraph> {
    let n = features.n();
    check_k(n, k)?;
    let row = |i: usize| -> Vec<(f64, u32)> {
        let xi = features.row(i);
        let mut cand: Vec<(f64, u32)> =
            (0..n).filter(|&j| j != i).map(|j| (euclidean(xi, features.row(j)), j as u32)).collect();
        let by = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by);
            cand.truncate(k);
        }
        cand.sort_unstable_by(by);
        cand
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<(f64, u32)>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<(f64, u32)>> = (0..n).map(row).collect();

    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for r in rows {
        for (d, j) in r {
            indices.push(j);
            distances.push(d);
        }
    }
    Ok(KnnGraph { n, k, indices, distances })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnDescentParams {
    /// Cap on new/old candidates sampled per node and round.
    pub max_candidates: Option<usize>,
    pub max_iters: usize,
    /// Stop when fewer than `delta * n * k` heap updates happen in a round.
    pub delta: f64,
}

impl Default for NnDescentParams {
    fn default() -> Self {
        Self { max_candidates: None, max_iters: 30, delta: 0.001 }
    }
}

/// One node's current neighbour list, kept sorted ascending by distance.
struct Candidates {
    items: Vec<(f64, u32, bool)>,
}

impl Candidates {
    /// Returns whether the list changed.
    fn push(&mut self, k: usize, d: f64, j: u32) -> bool {
        if self.items.len() == k && d >= self.items[k - 1].0 {
            return false;
        }
        if self.items.iter().any(|c| c.1 == j) {
            return false;
        }
        let pos = self.items.partition_point(|c| c.0 < d || (c.0 == d && c.1 < j));
        self.items.insert(pos, (d, j, true));
        self.items.truncate(k);
        true
    }
}

/// NN-descent: starts from random neighbour lists and repeatedly tries
/// neighbours-of-neighbours (forward and reverse) until few lists change.
/// Sequential, so a given seed always yields the same graph.
pub fn nn_descent(features: &FeatureMatrix, k: usize, seed: u64, params: &NnDescentParams) -> Result<KnnGraph> {
    let n = features.n();
    check_k(n, k)?;
    let mut rng = rng::stage_rng(seed, rng::stream::KNN);
    let max_cand = params.max_candidates.unwrap_or(k).max(1);
    let dist = |a: u32, b: u32| euclidean(features.row(a as usize), features.row(b as usize));

    let mut heaps: Vec<Candidates> = (0..n).map(|_| Candidates { items: Vec::with_capacity(k + 1) }).collect();
    for (i, heap) in heaps.iter_mut().enumerate() {
        while heap.items.len() < k {
            let j = rng.random_range(0..n) as u32;
            if j as usize != i {
                heap.push(k, dist(i as u32, j), j);
            }
        }
    }

    let mut new_c: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut old_c: Vec<Vec<u32>> = vec![Vec::new(); n];
    for round in 0..params.max_iters {
        for v in 0..n {
            new_c[v].clear();
            old_c[v].clear();
        }
        // forward candidates; sampled new entries become old
        for v in 0..n {
            let mut fresh: Vec<usize> = (0..heaps[v].items.len()).filter(|&s| heaps[v].items[s].2).collect();
            sample_in_place(&mut fresh, max_cand, &mut rng);
            for &s in &fresh {
                heaps[v].items[s].2 = false;
                new_c[v].push(heaps[v].items[s].1);
            }
            for item in &heaps[v].items {
                if !item.2 && !new_c[v].contains(&item.1) {
                    old_c[v].push(item.1);
                }
            }
        }
        // reverse candidates
        let mut rev_new: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut rev_old: Vec<Vec<u32>> = vec![Vec::new(); n];
        for v in 0..n {
            for &u in &new_c[v] {
                rev_new[u as usize].push(v as u32);
            }
            for &u in &old_c[v] {
                rev_old[u as usize].push(v as u32);
            }
        }
        for v in 0..n {
            sample_in_place(&mut rev_new[v], max_cand, &mut rng);
            sample_in_place(&mut rev_old[v], max_cand, &mut rng);
            for &u in &rev_new[v] {
                if !new_c[v].contains(&u) {
                    new_c[v].push(u);
                }
            }
            for &u in &rev_old[v] {
                if !old_c[v].contains(&u) {
                    old_c[v].push(u);
                }
            }
        }
        // local join
        let mut updates = 0usize;
        for v in 0..n {
            let news = &new_c[v];
            let olds = &old_c[v];
            for (a_pos, &a) in news.iter().enumerate() {
                for &b in news[a_pos + 1..].iter().chain(olds.iter()) {
                    if a == b {
                        continue;
                    }
                    let d = dist(a, b);
                    if heaps[a as usize].push(k, d, b) {
                        updates += 1;
                    }
                    if heaps[b as usize].push(k, d, a) {
                        updates += 1;
                    }
                }
            }
        }
        log::trace!("nn-descent round {round}: {updates} updates");
        if (updates as f64) < params.delta * (n * k) as f64 {
            break;
        }
    }

    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for h in heaps {
        for (d, j, _) in h.items {
            indices.push(j);
            distances.push(d);
        }
    }
    Ok(KnnGraph { n, k, indices, distances })
}

/// Keeps a uniform random subset of at most `cap` entries.
fn sample_in_place<T>(items: &mut Vec<T>, cap: usize, rng: &mut StageRng) {
    if items.len() <= cap {
        return;
    }
    for i in 0..cap {
        let j = rng.random_range(i..items.len());
        items.swap(i, j);
    }
    items.truncate(cap);
}

/// Fraction of true neighbours recovered, averaged over `nodes`.
pub fn recall(approx: &KnnGraph, exact: &KnnGraph, nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 1.0;
    }
    let hits: usize =
        nodes.iter().map(|&i| approx.neighbors(i).iter().filter(|j| exact.neighbors(i).contains(j)).count()).sum();
    hits as f64 / (nodes.len() * exact.k()) as f64
}
