//! Stochastic gradient descent on the fuzzy cross-entropy between the graph
//! and the layout.

use alloc::vec::Vec;
use core::cell::Cell;

use rand::Rng;

use super::{CurveParams, FuzzyGraph};
use crate::rng::{self, StageRng};
use crate::{EmbeddingMatrix, Error, Result};

const GRAD_CLIP: f64 = 4.0;
/// Edges handled by one worker-sized unit in parallel mode.
const CHUNK_EDGES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SgdMode {
    /// One worker, one random stream: bitwise reproducible.
    #[default]
    Deterministic,
    /// Edge chunks updated concurrently without synchronisation.
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdParams {
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub initial_learning_rate: f64,
    /// Weight of the repulsive term.
    pub repulsion_strength: f64,
    pub curve: CurveParams,
    pub mode: SgdMode,
    pub seed: u64,
}

/// Directed edge with its sampling schedule.
#[derive(Debug, Clone, Copy)]
struct Schedule {
    head: u32,
    tail: u32,
    epochs_per_sample: f64,
    next_sample: f64,
    epochs_per_negative: f64,
    next_negative: f64,
}

fn build_schedule(fuzzy: &FuzzyGraph, n_epochs: usize, negative_rate: usize) -> Vec<Schedule> {
    let max_w = fuzzy.edges().iter().fold(0.0f64, |m, e| m.max(e.weight));
    // edges too light to be sampled even once are dropped
    let cutoff = max_w / n_epochs as f64;
    let mut out = Vec::with_capacity(2 * fuzzy.edges().len());
    for e in fuzzy.edges() {
        if e.weight < cutoff {
            continue;
        }
        let eps = max_w / e.weight;
        let epn = if negative_rate > 0 { eps / negative_rate as f64 } else { f64::INFINITY };
        for (head, tail) in [(e.i, e.j), (e.j, e.i)] {
            out.push(Schedule {
                head,
                tail,
                epochs_per_sample: eps,
                next_sample: eps,
                epochs_per_negative: epn,
                next_negative: epn,
            });
        }
    }
    out
}

/// Shared coordinate storage; sequential cells or lock-free atomics.
trait Coords {
    fn get(&self, idx: usize) -> f64;
    fn add(&self, idx: usize, delta: f64);
}

struct CellCoords<'a>(&'a [Cell<f64>]);

impl Coords for CellCoords<'_> {
    #[inline]
    fn get(&self, idx: usize) -> f64 {
        self.0[idx].get()
    }

    #[inline]
    fn add(&self, idx: usize, delta: f64) {
        let c = &self.0[idx];
        c.set(c.get() + delta);
    }
}

struct AtomicCoords(Vec<core::sync::atomic::AtomicU64>);

impl Coords for AtomicCoords {
    #[inline]
    fn get(&self, idx: usize) -> f64 {
        f64::from_bits(self.0[idx].load(core::sync::atomic::Ordering::Relaxed))
    }

    #[inline]
    fn add(&self, idx: usize, delta: f64) {
        // racy read-modify-write is the intended Hogwild behaviour
        let v = self.get(idx) + delta;
        self.0[idx].store(v.to_bits(), core::sync::atomic::Ordering::Relaxed);
    }
}

#[inline]
fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

struct Kernel {
    a: f64,
    b: f64,
    gamma: f64,
    n: usize,
    p: usize,
}

impl Kernel {
    fn sq_dist<C: Coords>(&self, y: &C, i: usize, j: usize) -> f64 {
        (0..self.p)
            .map(|d| {
                let diff = y.get(i * self.p + d) - y.get(j * self.p + d);
                diff * diff
            })
            .sum()
    }

    fn run_edges<C: Coords>(&self, y: &C, edges: &mut [Schedule], epoch: usize, alpha: f64, rng: &mut StageRng) {
        let (a, b, p) = (self.a, self.b, self.p);
        let epoch_f = epoch as f64;
        for s in edges.iter_mut() {
            if s.next_sample > epoch_f {
                continue;
            }
            let (j, k) = (s.head as usize, s.tail as usize);
            let d2 = self.sq_dist(y, j, k);
            let coeff =
                if d2 > 0.0 { -2.0 * a * b * libm::pow(d2, b - 1.0) / (a * libm::pow(d2, b) + 1.0) } else { 0.0 };
            for d in 0..p {
                let g = clip(coeff * (y.get(j * p + d) - y.get(k * p + d))) * alpha;
                y.add(j * p + d, g);
                y.add(k * p + d, -g);
            }
            s.next_sample += s.epochs_per_sample;

            let n_neg = libm::floor((epoch_f - s.next_negative) / s.epochs_per_negative);
            let n_neg = if n_neg > 0.0 { n_neg as usize } else { 0 };
            for _ in 0..n_neg {
                let k = rng.random_range(0..self.n);
                if k == j {
                    continue;
                }
                let d2 = self.sq_dist(y, j, k);
                if d2 <= 0.0 {
                    continue;
                }
                let coeff = 2.0 * self.gamma * b / ((0.001 + d2) * (a * libm::pow(d2, b) + 1.0));
                for d in 0..p {
                    let g = clip(coeff * (y.get(j * p + d) - y.get(k * p + d))) * alpha;
                    y.add(j * p + d, g);
                }
            }
            s.next_negative += n_neg as f64 * s.epochs_per_negative;
        }
    }
}

/// Runs `n_epochs` of edge-sampled SGD starting from `init`.
///
/// Each undirected edge is visited in both directions, every
/// `max_weight / weight` epochs, and moves both endpoints; every visit also
/// draws `negative_sample_rate` uniform repulsion targets for the head.
pub fn optimize_embedding(fuzzy: &FuzzyGraph, init: &EmbeddingMatrix, params: &SgdParams) -> Result<EmbeddingMatrix> {
    let (n, p) = (init.n(), init.p());
    if fuzzy.n() != n {
        return Err(Error::DimensionMismatch { expected: fuzzy.n(), found: n, what: "initial layout rows" });
    }
    if !(params.initial_learning_rate >= 0.0) || !(params.repulsion_strength >= 0.0) {
        return Err(Error::InvalidArgument("learning rate and repulsion strength must be non-negative".into()));
    }
    if params.n_epochs == 0 || fuzzy.edges().is_empty() {
        return Ok(init.clone());
    }
    let kernel = Kernel { a: params.curve.a, b: params.curve.b, gamma: params.repulsion_strength, n, p };
    let mut schedule = build_schedule(fuzzy, params.n_epochs, params.negative_sample_rate);
    let mut values = init.values().to_vec();

    match params.mode {
        SgdMode::Deterministic => {
            let cells = Cell::from_mut(values.as_mut_slice()).as_slice_of_cells();
            let coords = CellCoords(cells);
            let mut rng = rng::stage_rng(params.seed, rng::stream::SGD);
            for epoch in 0..params.n_epochs {
                let alpha = learning_rate(params, epoch);
                kernel.run_edges(&coords, &mut schedule, epoch, alpha, &mut rng);
            }
        }
        SgdMode::Parallel => {
            let coords = AtomicCoords(values.iter().map(|v| core::sync::atomic::AtomicU64::new(v.to_bits())).collect());
            for epoch in 0..params.n_epochs {
                let alpha = learning_rate(params, epoch);
                let work = |(c, chunk): (usize, &mut [Schedule])| {
                    let mut rng = rng::worker_rng(params.seed, rng::stream::SGD, epoch as u64, c as u64);
                    kernel.run_edges(&coords, chunk, epoch, alpha, &mut rng);
                };
                #[cfg(feature = "parallel")]
                {
                    use rayon::prelude::*;
                    schedule.par_chunks_mut(CHUNK_EDGES).enumerate().for_each(work);
                }
                #[cfg(not(feature = "parallel"))]
                schedule.chunks_mut(CHUNK_EDGES).enumerate().for_each(work);
            }
            values = coords.0.into_iter().map(|a| f64::from_bits(a.into_inner())).collect();
        }
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(alloc::format!(
            "embedding coordinate {} of row {} became non-finite",
            pos % p,
            pos / p
        )));
    }
    EmbeddingMatrix::new(n, p, values)
}

fn learning_rate(params: &SgdParams, epoch: usize) -> f64 {
    params.initial_learning_rate * (1.0 - epoch as f64 / params.n_epochs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{fit_curve_params, Calibration, FuzzyEdge};
    use alloc::vec;

    fn chain(n: usize) -> FuzzyGraph {
        let cal = Calibration { rho: vec![0.0; n], sigma: vec![1.0; n], clamped: vec![false; n] };
        let edges =
            (0..n as u32 - 1).map(|i| FuzzyEdge { i, j: i + 1, weight: 1.0 / (1.0 + (i % 3) as f64) }).collect();
        FuzzyGraph::from_edges(n, edges, cal).unwrap()
    }

    fn params(mode: SgdMode, n_epochs: usize) -> SgdParams {
        SgdParams {
            n_epochs,
            negative_sample_rate: 5,
            initial_learning_rate: 1.0,
            repulsion_strength: 1.0,
            curve: fit_curve_params(0.5, 1.0).unwrap(),
            mode,
            seed: 11,
        }
    }

    fn init(n: usize) -> EmbeddingMatrix {
        crate::manifold::random_layout(n, 2, 5).unwrap()
    }

    #[test]
    fn zero_epochs_is_identity() {
        let g = chain(30);
        let y0 = init(30);
        assert_eq!(optimize_embedding(&g, &y0, &params(SgdMode::Deterministic, 0)).unwrap(), y0);
    }

    #[test]
    fn deterministic_mode_is_reproducible() {
        let g = chain(50);
        let y0 = init(50);
        let a = optimize_embedding(&g, &y0, &params(SgdMode::Deterministic, 100)).unwrap();
        let b = optimize_embedding(&g, &y0, &params(SgdMode::Deterministic, 100)).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.values().iter().all(|v| v.is_finite()));
        assert_ne!(a, y0);
    }

    #[test]
    fn parallel_mode_is_finite() {
        let g = chain(80);
        let y = optimize_embedding(&g, &init(80), &params(SgdMode::Parallel, 50)).unwrap();
        assert_eq!((y.n(), y.p()), (80, 2));
        assert!(y.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn neighbours_end_closer_than_strangers() {
        let g = chain(40);
        let y = optimize_embedding(&g, &init(40), &params(SgdMode::Deterministic, 300)).unwrap();
        let dist = |i: usize, j: usize| {
            let (a, b) = (y.row(i), y.row(j));
            libm::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]))
        };
        let near: f64 = (0..39).map(|i| dist(i, i + 1)).sum::<f64>() / 39.0;
        let far: f64 = (0..20).map(|i| dist(i, i + 20)).sum::<f64>() / 20.0;
        assert!(near < far, "near {near} far {far}");
    }

    #[test]
    fn schedule_drops_light_edges() {
        let cal = Calibration { rho: vec![0.0; 3], sigma: vec![1.0; 3], clamped: vec![false; 3] };
        let edges = vec![FuzzyEdge { i: 0, j: 1, weight: 1.0 }, FuzzyEdge { i: 1, j: 2, weight: 0.001 }];
        let g = FuzzyGraph::from_edges(3, edges, cal).unwrap();
        let s = build_schedule(&g, 200, 5);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].epochs_per_sample, 1.0);
        assert_eq!(s[0].epochs_per_negative, 0.2);
    }
}
