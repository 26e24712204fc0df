//! Lloyd's k-means with k-means++ seeding.
//!
//! Used to initialize the mixture fit and as the fixed-K comparison method.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::{self, StageRng};
use crate::{EmbeddingMatrix, Error, LabelVector, Result};

pub const DEFAULT_MAX_ITER: usize = 300;

/// How initial centers were picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Seeding {
    KMeansPlusPlus,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KmeansResult {
    pub labels: LabelVector,
    /// `k x p`, row-major.
    pub centers: Vec<f64>,
    pub k: usize,
    pub p: usize,
    /// Sum of squared distances to the assigned centers.
    pub inertia: f64,
    /// Inertia after every assignment step of the winning init.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seeding: Seeding,
}

impl KmeansResult {
    pub fn center(&self, c: usize) -> &[f64] {
        &self.centers[c * self.p..(c + 1) * self.p]
    }
}

/// Runs `n_init` seeded k-means++ / Lloyd restarts and keeps the lowest
/// inertia (ties go to the earliest restart).
pub fn kmeans_fit(y: &EmbeddingMatrix, k: usize, n_init: usize, max_iter: usize, seed: u64) -> Result<KmeansResult> {
    let n = y.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k-means needs 1 <= k <= n, got k={k}, n={n}")));
    }
    if n_init == 0 {
        return Err(Error::InvalidArgument("k-means needs at least one initialization".into()));
    }
    let run = |init: usize| {
        let mut rng = rng::worker_rng(seed, rng::stream::KMEANS, init as u64, 0);
        let centers = plus_plus_seeds(y, k, &mut rng);
        lloyd(y, k, centers, max_iter)
    };

    #[cfg(feature = "parallel")]
    let runs: Vec<KmeansResult> = {
        use rayon::prelude::*;
        (0..n_init).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<KmeansResult> = (0..n_init).map(run).collect();

    let mut best: Option<KmeansResult> = None;
    for r in runs {
        if best.as_ref().is_none_or(|b| r.inertia < b.inertia) {
            best = Some(r);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

/// k-means++ seeding: first center uniform, then each next center drawn with
/// probability proportional to its squared distance to the closest center.
pub fn plus_plus_seeds(y: &EmbeddingMatrix, k: usize, rng: &mut StageRng) -> Vec<f64> {
    let (n, p) = (y.n(), y.p());
    let mut centers = Vec::with_capacity(k * p);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(y.row(first));
    let mut closest: Vec<f64> = y.rows().map(|r| sq_dist(r, y.row(first))).collect();
    for _ in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in closest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `acc` a hair below `target`
            pick.unwrap_or_else(|| closest.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..n)
        };
        let c = y.row(pick);
        centers.extend_from_slice(c);
        for (i, row) in y.rows().enumerate() {
            let d = sq_dist(row, c);
            if d < closest[i] {
                closest[i] = d;
            }
        }
    }
    centers
}

/// Lloyd iterations from the given centers until the assignment stops
/// changing or `max_iter` assignment steps have run.
pub fn lloyd(y: &EmbeddingMatrix, k: usize, mut centers: Vec<f64>, max_iter: usize) -> KmeansResult {
    let (n, p) = (y.n(), y.p());
    let mut labels = vec![u32::MAX; n];
    let mut dists = vec![0.0; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        iterations += 1;
        let mut changed = false;
        for (i, row) in y.rows().enumerate() {
            let (c, d) = nearest(row, &centers, p);
            if labels[i] != c as u32 {
                labels[i] = c as u32;
                changed = true;
            }
            dists[i] = d;
        }
        trace.push(dists.iter().sum());
        if !changed {
            converged = true;
            break;
        }
        update_centers(y, k, &mut labels, &mut dists, &mut centers);
    }
    if !converged {
        // the cap was hit right after an assignment; bring centers in line
        update_centers(y, k, &mut labels, &mut dists, &mut centers);
        for (i, row) in y.rows().enumerate() {
            dists[i] = sq_dist(row, &centers[labels[i] as usize * p..][..p]);
        }
        trace.push(dists.iter().sum());
    }
    let inertia = *trace.last().expect("at least one assignment step");
    KmeansResult {
        labels: LabelVector::new(labels),
        centers,
        k,
        p,
        inertia,
        inertia_trace: trace,
        iterations,
        converged,
        seeding: Seeding::KMeansPlusPlus,
    }
}

/// Recomputes centers as cluster means. An empty cluster takes the point
/// farthest from its current center (only from clusters with >1 member).
fn update_centers(y: &EmbeddingMatrix, k: usize, labels: &mut [u32], dists: &mut [f64], centers: &mut [f64]) {
    let p = y.p();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l as usize] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let victim = (0..labels.len())
            .filter(|&i| counts[labels[i] as usize] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
        if let Some(i) = victim {
            counts[labels[i] as usize] -= 1;
            labels[i] = c as u32;
            counts[c] = 1;
            dists[i] = 0.0;
        }
    }
    centers.iter_mut().for_each(|v| *v = 0.0);
    for (i, row) in y.rows().enumerate() {
        let c = &mut centers[labels[i] as usize * p..][..p];
        for (a, &b) in c.iter_mut().zip(row) {
            *a += b;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            centers[c * p..(c + 1) * p].iter_mut().for_each(|v| *v *= inv);
        }
    }
}

#[inline]
fn nearest(row: &[f64], centers: &[f64], p: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.chunks_exact(p).enumerate() {
        let d = sq_dist(row, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
