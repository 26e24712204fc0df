//! Seeded synthetic data sets.

#![allow(dead_code)]

use npcluster_core::{EmbeddingMatrix, FeatureMatrix, LabelVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Isotropic Gaussian blobs with standard deviation `sigma`; cluster `c`
/// gets `sizes[c]` points around `centers[c]`.
pub fn blobs(centers: &[Vec<f64>], sizes: &[usize], sigma: f64, seed: u64) -> (Vec<f64>, LabelVector) {
    let mut r = rng(seed);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (c, (center, &size)) in centers.iter().zip(sizes).enumerate() {
        for _ in 0..size {
            for &m in center {
                let z: f64 = r.sample(StandardNormal);
                values.push(m + sigma * z);
            }
            labels.push(c as u32);
        }
    }
    (values, LabelVector::new(labels))
}

pub fn embedding(centers: &[Vec<f64>], sizes: &[usize], sigma: f64, seed: u64) -> (EmbeddingMatrix, LabelVector) {
    let p = centers[0].len();
    let (values, labels) = blobs(centers, sizes, sigma, seed);
    (EmbeddingMatrix::new(labels.len(), p, values).unwrap(), labels)
}

pub fn features(centers: &[Vec<f64>], sizes: &[usize], sigma: f64, seed: u64) -> (FeatureMatrix, LabelVector) {
    let d = centers[0].len();
    let (values, labels) = blobs(centers, sizes, sigma, seed);
    let values = values.into_iter().map(|v| v as f32).collect();
    (FeatureMatrix::new(labels.len(), d, values).unwrap(), labels)
}

/// Three 2-D centres on an equilateral triangle with side `side`.
pub fn triangle(side: f64) -> Vec<Vec<f64>> {
    let h = side * 3f64.sqrt() / 2.0;
    vec![vec![0.0, 0.0], vec![side, 0.0], vec![side / 2.0, h]]
}

/// Two centres `distance` apart along a random direction in `d` dimensions.
pub fn two_far_centers(d: usize, distance: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed ^ 0xA5A5);
    let dir: Vec<f64> = (0..d).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    vec![vec![0.0; d], dir.iter().map(|v| v / norm * distance).collect()]
}
