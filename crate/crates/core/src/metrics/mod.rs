//! External clustering scores against a reference labelling: accuracy under
//! optimal one-to-one label matching, normalized mutual information and the
//! adjusted Rand index.

mod contingency;
mod hungarian;

pub use contingency::{contingency, ContingencyTable};
pub use hungarian::{assignment_cost, hungarian};

use alloc::vec::Vec;

use crate::{Error, LabelVector, Result};

/// Normalizer for mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NmiNormalization {
    /// `(H(T) + H(P)) / 2`
    #[default]
    Arithmetic,
    /// `sqrt(H(T) H(P))`
    Geometric,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub inferred_k: usize,
    pub true_k: usize,
    pub n: usize,
}

/// Fraction of samples correctly labelled under the best one-to-one mapping
/// of predicted clusters onto reference classes. Surplus predicted clusters
/// match nothing and count as errors.
pub fn clustering_accuracy(true_labels: &LabelVector, pred_labels: &LabelVector) -> Result<f64> {
    let table = contingency(true_labels, pred_labels)?;
    Ok(accuracy_from_table(&table))
}

fn accuracy_from_table(table: &ContingencyTable) -> f64 {
    let cost: Vec<f64> = table.counts().iter().map(|&c| -(c as f64)).collect();
    let pairs = hungarian(&cost, table.rows(), table.cols()).expect("counts are finite");
    let matched: u64 = pairs.iter().map(|&(i, j)| table.get(i, j)).sum();
    matched as f64 / table.total() as f64
}

pub fn nmi(true_labels: &LabelVector, pred_labels: &LabelVector) -> Result<f64> {
    nmi_with(true_labels, pred_labels, NmiNormalization::Arithmetic)
}

/// Mutual information (natural log) divided by the chosen mean of the two
/// entropies. Identical partitions score 1, including two single-cluster
/// labellings; a zero-entropy side otherwise scores 0.
pub fn nmi_with(true_labels: &LabelVector, pred_labels: &LabelVector, norm: NmiNormalization) -> Result<f64> {
    let table = contingency(true_labels, pred_labels)?;
    Ok(nmi_from_table(&table, norm))
}

fn nmi_from_table(table: &ContingencyTable, norm: NmiNormalization) -> f64 {
    if same_partition(table) {
        return 1.0;
    }
    let n = table.total() as f64;
    let h_true = entropy(table.row_sums(), n);
    let h_pred = entropy(table.col_sums(), n);
    if h_true == 0.0 || h_pred == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for i in 0..table.rows() {
        let a = table.row_sums()[i] as f64;
        for j in 0..table.cols() {
            let c = table.get(i, j);
            if c == 0 {
                continue;
            }
            let c = c as f64;
            let b = table.col_sums()[j] as f64;
            mi += c / n * libm::log(c * n / (a * b));
        }
    }
    let denom = match norm {
        NmiNormalization::Arithmetic => 0.5 * (h_true + h_pred),
        NmiNormalization::Geometric => libm::sqrt(h_true * h_pred),
    };
    (mi / denom).clamp(0.0, 1.0)
}

/// Chance-adjusted Rand index. Needs at least two samples.
pub fn ari(true_labels: &LabelVector, pred_labels: &LabelVector) -> Result<f64> {
    if true_labels.len() < 2 {
        return Err(Error::Precondition("the adjusted Rand index needs at least two samples".into()));
    }
    let table = contingency(true_labels, pred_labels)?;
    Ok(ari_from_table(&table))
}

fn ari_from_table(table: &ContingencyTable) -> f64 {
    let n = table.total();
    // C(n, 2) must fit in u64 for the exact pair counts below
    assert!(n <= 3_000_000_000, "pair counts overflow for n = {n}");
    let index: u64 = table.counts().iter().map(|&c| comb2(c)).sum();
    let sum_a: u64 = table.row_sums().iter().map(|&c| comb2(c)).sum();
    let sum_b: u64 = table.col_sums().iter().map(|&c| comb2(c)).sum();
    let total_pairs = comb2(n);
    let expected = (u128::from(sum_a) * u128::from(sum_b)) as f64 / total_pairs as f64;
    let max_index = 0.5 * (sum_a as f64 + sum_b as f64);
    let denom = max_index - expected;
    if denom == 0.0 {
        return if same_partition(table) { 1.0 } else { 0.0 };
    }
    (index as f64 - expected) / denom
}

/// All three scores plus cluster counts.
pub fn evaluate(true_labels: &LabelVector, pred_labels: &LabelVector) -> Result<MetricsReport> {
    let table = contingency(true_labels, pred_labels)?;
    let ari = if table.total() >= 2 {
        ari_from_table(&table)
    } else {
        return Err(Error::Precondition("evaluation needs at least two samples".into()));
    };
    Ok(MetricsReport {
        acc: accuracy_from_table(&table),
        nmi: nmi_from_table(&table, NmiNormalization::Arithmetic),
        ari,
        inferred_k: table.cols(),
        true_k: table.rows(),
        n: table.total() as usize,
    })
}

fn comb2(c: u64) -> u64 {
    if c < 2 {
        0
    } else {
        c * (c - 1) / 2
    }
}

fn entropy(sizes: &[u64], n: f64) -> f64 {
    -sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let q = s as f64 / n;
            q * libm::log(q)
        })
        .sum::<f64>()
}

// One non-zero cell per row and per column means a bijection between labels.
fn same_partition(table: &ContingencyTable) -> bool {
    table.rows() == table.cols()
        && (0..table.rows()).all(|i| (0..table.cols()).filter(|&j| table.get(i, j) > 0).count() == 1)
}
