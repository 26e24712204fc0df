//! Starting layouts for the embedding optimizer.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::FuzzyGraph;
use crate::linalg;
use crate::rng;
use crate::{EmbeddingMatrix, Error, Result};

/// Coordinates are rescaled so the largest magnitude equals this.
const INIT_EXTENT: f64 = 10.0;
const NOISE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitMethod {
    /// Leading non-trivial eigenvectors of the normalized graph Laplacian.
    #[default]
    Spectral,
    /// Uniform in `[-10, 10]^p`.
    Random,
}

/// Spectral layouts fall back to a random one (with a warning) when the graph
/// is disconnected or the eigensolver fails.
pub fn initialize_embedding(fuzzy: &FuzzyGraph, p: usize, method: InitMethod, seed: u64) -> Result<EmbeddingMatrix> {
    if p == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
    }
    let n = fuzzy.n();
    match method {
        InitMethod::Random => random_layout(n, p, seed),
        InitMethod::Spectral => {
            let (count, _) = fuzzy.components();
            if count > 1 {
                log::warn!("fuzzy graph has {count} connected components; using a random initial layout");
                return random_layout(n, p, seed);
            }
            match spectral_layout(fuzzy, p, seed) {
                Ok(y) => Ok(y),
                Err(e) => {
                    log::warn!("spectral initialization failed ({e}); using a random initial layout");
                    random_layout(n, p, seed)
                }
            }
        }
    }
}

pub fn random_layout(n: usize, p: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let mut rng = rng::stage_rng(seed, rng::stream::INIT);
    let values = (0..n * p).map(|_| rng.random_range(-INIT_EXTENT..INIT_EXTENT)).collect();
    EmbeddingMatrix::new(n, p, values)
}

/// Symmetric normalized adjacency `D^{-1/2} W D^{-1/2}` in CSR form.
struct NormalizedAdjacency {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    fn new(fuzzy: &FuzzyGraph) -> Self {
        let n = fuzzy.n();
        let mut degree = vec![0.0; n];
        let mut counts = vec![0usize; n];
        for e in fuzzy.edges() {
            degree[e.i as usize] += e.weight;
            degree[e.j as usize] += e.weight;
            counts[e.i as usize] += 1;
            counts[e.j as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + counts[i];
        }
        let mut fill = offsets[..n].to_vec();
        let mut cols = vec![0u32; offsets[n]];
        let mut vals = vec![0.0; offsets[n]];
        for e in fuzzy.edges() {
            let (i, j) = (e.i as usize, e.j as usize);
            let v = e.weight / libm::sqrt(degree[i] * degree[j]);
            cols[fill[i]] = e.j;
            vals[fill[i]] = v;
            fill[i] += 1;
            cols[fill[j]] = e.i;
            vals[fill[j]] = v;
            fill[j] += 1;
        }
        Self { offsets, cols, vals }
    }

    /// `out = (x + A x) / 2`; the shift maps the spectrum into `[0, 1]`.
    fn apply_shifted(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for pos in self.offsets[i]..self.offsets[i + 1] {
                s += self.vals[pos] * x[self.cols[pos] as usize];
            }
            *o = 0.5 * (x[i] + s);
        }
    }
}

const SUBSPACE_MAX_ITER: usize = 2000;
const RESIDUAL_TOL: f64 = 1e-6;
/// Ritz residual above which the result is treated as a failure.
const RESIDUAL_FAIL: f64 = 1e-2;

/// Eigenvectors 2..p+1 of the normalized Laplacian by block subspace
/// iteration with Rayleigh-Ritz, deflating the known top eigenvector.
fn spectral_layout(fuzzy: &FuzzyGraph, p: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let n = fuzzy.n();
    if n < p + 2 {
        return Err(Error::Precondition("too few points for a spectral layout".into()));
    }
    let op = NormalizedAdjacency::new(fuzzy);
    let mut trivial = vec![0.0; n];
    for e in fuzzy.edges() {
        trivial[e.i as usize] += e.weight;
        trivial[e.j as usize] += e.weight;
    }
    trivial.iter_mut().for_each(|d| *d = libm::sqrt(*d));
    normalize(&mut trivial)?;

    let block = (p + 8).min(n - 1);
    let mut rng = rng::stage_rng(seed, rng::stream::INIT);
    let mut basis: Vec<Vec<f64>> = (0..block).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    orthonormalize(&mut basis, &trivial)?;

    let mut images: Vec<Vec<f64>> = vec![vec![0.0; n]; block];
    let mut residual = f64::INFINITY;
    let mut ritz: Vec<Vec<f64>> = Vec::new();
    for iter in 0..SUBSPACE_MAX_ITER {
        for (b, img) in basis.iter().zip(images.iter_mut()) {
            op.apply_shifted(b, img);
        }
        // Rayleigh-Ritz every few steps; plain power steps otherwise
        if iter % 10 == 9 || iter + 1 == SUBSPACE_MAX_ITER {
            let mut h = vec![0.0; block * block];
            for a in 0..block {
                for b in 0..block {
                    h[a * block + b] = dot(&basis[a], &images[b]);
                }
            }
            linalg::symmetrize(&mut h, block);
            let (vals, vecs) = linalg::symmetric_eigen(&h, block);
            ritz = combine(&basis, &vecs, block, p);
            let ritz_images = combine(&images, &vecs, block, p);
            residual = (0..p)
                .map(|c| {
                    let r: f64 = ritz_images[c]
                        .iter()
                        .zip(&ritz[c])
                        .map(|(ax, x)| (ax - vals[c] * x) * (ax - vals[c] * x))
                        .sum();
                    libm::sqrt(r)
                })
                .fold(0.0, f64::max);
            if !residual.is_finite() {
                return Err(Error::Numerical("non-finite Ritz residual".into()));
            }
            if residual < RESIDUAL_TOL {
                break;
            }
        }
        core::mem::swap(&mut basis, &mut images);
        orthonormalize(&mut basis, &trivial)?;
    }
    if residual > RESIDUAL_FAIL {
        return Err(Error::NoConvergence { routine: "spectral eigensolver", iterations: SUBSPACE_MAX_ITER });
    }

    let mut values = vec![0.0; n * p];
    for (c, v) in ritz.iter().enumerate() {
        for i in 0..n {
            values[i * p + c] = v[i];
        }
    }
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(max_abs > 0.0) {
        return Err(Error::Numerical("spectral layout collapsed to zero".into()));
    }
    let expansion = INIT_EXTENT / max_abs;
    let mut noise = rng::stage_rng(seed, rng::stream::NOISE);
    for v in values.iter_mut() {
        *v = *v * expansion + noise.random_range(-NOISE..NOISE);
    }
    EmbeddingMatrix::new(n, p, values)
}

fn combine(basis: &[Vec<f64>], vecs: &[f64], block: usize, take: usize) -> Vec<Vec<f64>> {
    let n = basis[0].len();
    (0..take)
        .map(|c| {
            let mut out = vec![0.0; n];
            for (b, col) in basis.iter().enumerate() {
                let w = vecs[b * block + c];
                for (o, x) in out.iter_mut().zip(col) {
                    *o += w * x;
                }
            }
            out
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let norm = libm::sqrt(dot(v, v));
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Numerical("zero or non-finite vector in eigensolver".into()));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// Modified Gram-Schmidt against `fixed` and then each other (two passes).
fn orthonormalize(basis: &mut [Vec<f64>], fixed: &[f64]) -> Result<()> {
    for _pass in 0..2 {
        for i in 0..basis.len() {
            let (done, rest) = basis.split_at_mut(i);
            let v = &mut rest[0];
            let c = dot(v, fixed);
            v.iter_mut().zip(fixed).for_each(|(x, f)| *x -= c * f);
            for u in done.iter() {
                let c = dot(v, u);
                v.iter_mut().zip(u).for_each(|(x, f)| *x -= c * f);
            }
            normalize(v)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Calibration, FuzzyEdge};

    fn graph(n: usize, edges: &[(u32, u32, f64)]) -> FuzzyGraph {
        let cal = Calibration { rho: vec![0.0; n], sigma: vec![1.0; n], clamped: vec![false; n] };
        let edges = edges.iter().map(|&(i, j, weight)| FuzzyEdge { i, j, weight }).collect();
        FuzzyGraph::from_edges(n, edges, cal).unwrap()
    }

    fn ring(n: usize) -> FuzzyGraph {
        let e: Vec<(u32, u32, f64)> = (0..n as u32).map(|i| (i, (i + 1) % n as u32, 1.0)).collect();
        graph(n, &e)
    }

    #[test]
    fn random_layout_is_bounded_and_seeded() {
        let g = ring(20);
        let a = initialize_embedding(&g, 3, InitMethod::Random, 4).unwrap();
        let b = initialize_embedding(&g, 3, InitMethod::Random, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.n(), a.p()), (20, 3));
        assert!(a.values().iter().all(|v| v.abs() <= 10.0));
    }

    #[test]
    fn spectral_ring_recovers_circle() {
        // the first non-trivial Laplacian eigenpair of a ring is (cos, sin)
        let g = ring(40);
        let y = initialize_embedding(&g, 2, InitMethod::Spectral, 1).unwrap();
        let radii: Vec<f64> = y.rows().map(|r| libm::sqrt(r[0] * r[0] + r[1] * r[1])).collect();
        let mean = radii.iter().sum::<f64>() / 40.0;
        assert!(radii.iter().all(|r| (r - mean).abs() < 1e-3 * mean), "{radii:?}");
        let max_abs = y.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((max_abs - 10.0).abs() < 1e-3);
    }

    #[test]
    fn disconnected_cliques_fall_back() {
        let mut e = Vec::new();
        for a in 0..5u32 {
            for b in a + 1..5 {
                e.push((a, b, 1.0));
                e.push((a + 5, b + 5, 1.0));
            }
        }
        let g = graph(10, &e);
        let y = initialize_embedding(&g, 2, InitMethod::Spectral, 3).unwrap();
        assert!(y.values().iter().all(|v| v.is_finite()));
        assert_eq!(y, random_layout(10, 2, 3).unwrap());
    }

    #[test]
    fn spectral_is_deterministic() {
        let g = ring(30);
        let a = initialize_embedding(&g, 2, InitMethod::Spectral, 8).unwrap();
        let b = initialize_embedding(&g, 2, InitMethod::Spectral, 8).unwrap();
        assert_eq!(a, b);
    }
}
