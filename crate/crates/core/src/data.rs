//! Containers for features, labels and embeddings.
//!
//! All three are immutable once built and validate their invariants on
//! construction, so downstream stages can index without re-checking.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `n x d` deep-feature vectors, row-major `f32`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f32>) -> Result<Self> {
        check_shape(n, d, values.len(), "feature matrix")?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / d, col: pos % d });
        }
        Ok(Self { n, d, values })
    }

    /// Builds from nested rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: r.len(), what: "row length" });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), d, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }
}

/// `n x p` low-dimensional coordinates, row-major `f64`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmbeddingMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(n, p, values.len(), "embedding matrix")?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / p, col: pos % p });
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * p);
        for r in rows {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: r.len(), what: "row length" });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), p, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.p)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Lossless for every finite `f32`.
    pub fn from_features(features: &FeatureMatrix) -> Self {
        let values = features.values().iter().map(|&v| f64::from(v)).collect();
        Self { n: features.n(), p: features.d(), values }
    }
}

/// Per-sample integer labels (ground truth or hard cluster assignments).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct LabelVector(Vec<u32>);

impl LabelVector {
    pub fn new(labels: Vec<u32>) -> Self {
        Self(labels)
    }

    /// Checks the pairing invariant against a matrix with `n` rows.
    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: n, found: self.0.len(), what: "label count" })
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    /// Number of distinct label values.
    pub fn distinct(&self) -> usize {
        let mut seen: Vec<u32> = self.0.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

impl From<Vec<u32>> for LabelVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl core::ops::Index<usize> for LabelVector {
    type Output = u32;

    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

/// Maps labels onto `0..K` in order of first occurrence.
///
/// Returns the re-indexed labels and `K`.
pub fn relabel_contiguous(labels: &LabelVector) -> Result<(LabelVector, usize)> {
    if labels.is_empty() {
        return Err(Error::Precondition("label vector must contain at least one sample".into()));
    }
    let mut ids: BTreeMap<u32, u32> = BTreeMap::new();
    let out = labels
        .as_slice()
        .iter()
        .map(|&l| {
            let next = ids.len() as u32;
            *ids.entry(l).or_insert(next)
        })
        .collect();
    Ok((LabelVector(out), ids.len()))
}

fn check_shape(n: usize, cols: usize, len: usize, what: &str) -> Result<()> {
    if n == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!("{what} needs n >= 1 and at least one column, got {n}x{cols}")));
    }
    match n.checked_mul(cols) {
        Some(expected) if expected == len => Ok(()),
        Some(expected) => Err(Error::DimensionMismatch { expected, found: len, what: "value count" }),
        None => Err(Error::InvalidArgument(format!("{what} shape {n}x{cols} overflows"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn relabel_first_occurrence() {
        let (l, k) = relabel_contiguous(&LabelVector::new(vec![5, 5, 9])).unwrap();
        assert_eq!(l.as_slice(), &[0, 0, 1]);
        assert_eq!(k, 2);

        let (l, k) = relabel_contiguous(&LabelVector::new(vec![0, 1, 2])).unwrap();
        assert_eq!(l.as_slice(), &[0, 1, 2]);
        assert_eq!(k, 3);

        let (l, _) = relabel_contiguous(&LabelVector::new(vec![7, 3, 7, 1])).unwrap();
        assert_eq!(l.as_slice(), &[0, 1, 0, 2]);
    }

    #[test]
    fn relabel_rejects_empty() {
        assert!(matches!(relabel_contiguous(&LabelVector::new(vec![])), Err(Error::Precondition(_))));
    }

    #[test]
    fn matrix_validation() {
        let m = FeatureMatrix::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.row(1), &[4., 5., 6.]);
        assert!(FeatureMatrix::new(0, 3, vec![]).is_err());
        assert!(FeatureMatrix::new(2, 0, vec![]).is_err());
        assert!(matches!(FeatureMatrix::new(2, 2, vec![1., 2., 3.]), Err(Error::DimensionMismatch { .. })));
        assert_eq!(FeatureMatrix::new(2, 2, vec![1., 2., f32::NAN, 3.]), Err(Error::NonFinite { row: 1, col: 0 }));
        assert!(EmbeddingMatrix::new(1, 2, vec![0.0, f64::INFINITY]).is_err());
        assert!(FeatureMatrix::from_rows(&[vec![1.0f32, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn label_length_check() {
        let l = LabelVector::new(vec![0, 1]);
        assert!(l.check_len(2).is_ok());
        assert!(l.check_len(3).is_err());
        assert_eq!(LabelVector::new(vec![4, 4, 2, 9]).distinct(), 3);
    }

    proptest! {
        #[test]
        fn relabel_preserves_partition(labels in proptest::collection::vec(0u32..8, 1..40)) {
            let (out, k) = relabel_contiguous(&LabelVector::new(labels.clone())).unwrap();
            prop_assert!(out.as_slice().iter().all(|&l| (l as usize) < k));
            for i in 0..labels.len() {
                for j in 0..labels.len() {
                    prop_assert_eq!(labels[i] == labels[j], out[i] == out[j]);
                }
            }
        }
    }
}
