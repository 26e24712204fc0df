use alloc::vec;
use alloc::vec::Vec;

use super::stick::expected_weights;
use super::DpgmmState;
use crate::{EmbeddingMatrix, LabelVector};

/// Hard clustering read off a fitted state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterResult {
    /// Component index per sample (not re-indexed).
    pub labels: LabelVector,
    /// Number of components owning at least one sample.
    pub inferred_k: usize,
    /// `E[pi_k]` for every component.
    pub mixture_weights: Vec<f64>,
    /// Posterior mean locations, one `p`-vector per component.
    pub component_means: Vec<Vec<f64>>,
    /// `(nu_k W_k)^{-1}`, the inverse of the expected precision, row-major.
    pub component_covariances: Vec<Vec<f64>>,
}

/// Argmax labels (ties go to the lower index), occupied-component count and
/// posterior summaries.
pub fn extract_result(state: &DpgmmState, _y: &EmbeddingMatrix) -> ClusterResult {
    let k_max = state.max_components;
    let mut occupied = vec![false; k_max];
    let labels: Vec<u32> = (0..state.n)
        .map(|i| {
            let row = state.resp_row(i);
            let mut best = 0;
            for k in 1..k_max {
                if row[k] > row[best] {
                    best = k;
                }
            }
            occupied[best] = true;
            best as u32
        })
        .collect();
    let p = state.p;
    let component_covariances = state
        .components
        .iter()
        .map(|c| {
            // (nu W)^{-1} = W^{-1} / nu = L L^T / nu
            let l = &c.scale_inv_chol;
            let mut cov = vec![0.0; p * p];
            for i in 0..p {
                for j in 0..p {
                    let s: f64 = (0..p).map(|m| l[i * p + m] * l[j * p + m]).sum();
                    cov[i * p + j] = s / c.dof;
                }
            }
            cov
        })
        .collect();
    ClusterResult {
        labels: LabelVector::new(labels),
        inferred_k: occupied.iter().filter(|o| **o).count(),
        mixture_weights: expected_weights(&state.beta_params),
        component_means: state.components.iter().map(|c| c.mean.clone()).collect(),
        component_covariances,
    }
}
