use alloc::vec;
use alloc::vec::Vec;

use crate::{relabel_contiguous, Error, LabelVector, Result};

/// Co-occurrence counts between a reference partition (rows) and a predicted
/// partition (columns), after contiguous relabelling of both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

pub fn contingency(true_labels: &LabelVector, pred_labels: &LabelVector) -> Result<ContingencyTable> {
    if true_labels.len() != pred_labels.len() {
        return Err(Error::DimensionMismatch {
            expected: true_labels.len(),
            found: pred_labels.len(),
            what: "label vector length",
        });
    }
    let (t, rows) = relabel_contiguous(true_labels)?;
    let (p, cols) = relabel_contiguous(pred_labels)?;
    let mut counts = vec![0u64; rows * cols];
    let mut row_sums = vec![0u64; rows];
    let mut col_sums = vec![0u64; cols];
    for (&a, &b) in t.as_slice().iter().zip(p.as_slice()) {
        counts[a as usize * cols + b as usize] += 1;
        row_sums[a as usize] += 1;
        col_sums[b as usize] += 1;
    }
    Ok(ContingencyTable { rows, cols, counts, row_sums, col_sums, total: true_labels.len() as u64 })
}
