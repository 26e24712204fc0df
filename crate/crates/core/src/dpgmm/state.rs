use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{update_components, DpgmmConfig, Prior};
use crate::baselines::{self, DEFAULT_MAX_ITER};
use crate::{linalg, EmbeddingMatrix, Error, Result};

/// Total responsibility spread uniformly over clusters that k-means left
/// empty, per row, before renormalization.
const EMPTY_CLUSTER_MASS: f64 = 1e-8;

/// Normal-Wishart posterior of one component.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentPosterior {
    /// `m_k`
    pub mean: Vec<f64>,
    /// `beta_k`, the precision scaling of the mean.
    pub beta: f64,
    /// `W_k`, row-major `p x p`.
    pub scale: Vec<f64>,
    /// `nu_k`
    pub dof: f64,
    /// Lower Cholesky factor of `W_k^{-1}`.
    pub scale_inv_chol: Vec<f64>,
    /// `ln |W_k|`
    pub log_det_scale: f64,
}

impl ComponentPosterior {
    /// The posterior that carries no data: exactly the prior.
    pub fn from_prior(prior: &Prior) -> Result<Self> {
        let chol = linalg::cholesky(&prior.scale_inv, prior.p)
            .ok_or_else(|| Error::Numerical("prior scale is not positive-definite".into()))?;
        Ok(Self {
            mean: prior.mean.clone(),
            beta: prior.mean_precision,
            scale: prior.scale.clone(),
            dof: prior.dof,
            scale_inv_chol: chol,
            log_det_scale: prior.log_det_scale,
        })
    }

    /// `E[ln |Lambda_k|]`
    pub fn expected_log_det_precision(&self) -> f64 {
        let p = self.mean.len();
        let digammas: f64 = (1..=p).map(|i| crate::special::digamma(0.5 * (self.dof + 1.0 - i as f64))).sum();
        digammas + p as f64 * core::f64::consts::LN_2 + self.log_det_scale
    }
}

/// Variational parameters of a fit plus its ELBO history.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DpgmmState {
    pub n: usize,
    pub p: usize,
    pub max_components: usize,
    /// Beta posterior `(a_k, b_k)` of each stick fraction. The last stick is
    /// pinned to 1 by the truncation and its pair is kept for bookkeeping.
    pub beta_params: Vec<(f64, f64)>,
    pub components: Vec<ComponentPosterior>,
    /// `n x K` row-stochastic responsibilities.
    pub responsibilities: Vec<f64>,
    pub elbo_trace: Vec<f64>,
    pub prior: Prior,
    pub iterations: usize,
    pub converged: bool,
    pub init_seed: u64,
}

impl DpgmmState {
    #[inline]
    pub fn resp_row(&self, i: usize) -> &[f64] {
        &self.responsibilities[i * self.max_components..(i + 1) * self.max_components]
    }

    /// `N_k = sum_n r_nk`
    pub fn component_mass(&self) -> Vec<f64> {
        let k_max = self.max_components;
        let mut mass = vec![0.0; k_max];
        for row in self.responsibilities.chunks_exact(k_max) {
            for (m, r) in mass.iter_mut().zip(row) {
                *m += r;
            }
        }
        mass
    }

    pub fn final_elbo(&self) -> f64 {
        self.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Builds a state with responsibilities `resp` and components fitted to
    /// them. Useful for tests and for resuming from saved responsibilities.
    pub fn from_responsibilities(y: &EmbeddingMatrix, prior: Prior, k_max: usize, resp: Vec<f64>) -> Result<Self> {
        if resp.len() != y.n() * k_max {
            return Err(Error::DimensionMismatch {
                expected: y.n() * k_max,
                found: resp.len(),
                what: "responsibility count",
            });
        }
        let blank = ComponentPosterior::from_prior(&prior)?;
        let mut state = Self {
            n: y.n(),
            p: y.p(),
            max_components: k_max,
            beta_params: vec![(1.0, prior.concentration); k_max],
            components: vec![blank; k_max],
            responsibilities: resp,
            elbo_trace: Vec::new(),
            prior,
            iterations: 0,
            converged: false,
            init_seed: 0,
        };
        update_components(&mut state, y)?;
        Ok(state)
    }
}

/// k-means (K = truncation level, capped at `n`) hard assignments turned into
/// responsibilities, followed by one component update.
pub fn init_state(y: &EmbeddingMatrix, config: &DpgmmConfig, init_seed: u64) -> Result<DpgmmState> {
    let prior = Prior::from_data(y, config)?;
    init_with_prior(y, config, prior, init_seed)
}

pub(super) fn init_with_prior(
    y: &EmbeddingMatrix,
    config: &DpgmmConfig,
    prior: Prior,
    init_seed: u64,
) -> Result<DpgmmState> {
    let n = y.n();
    if n < 2 || y.rows().all(|r| r == y.row(0)) {
        return Err(Error::Precondition(format!("the mixture fit needs at least two distinct points (n = {n})")));
    }
    let k_max = config.max_components;
    let k = k_max.min(n);
    let km = baselines::kmeans_fit(y, k, 1, DEFAULT_MAX_ITER, init_seed)?;

    let mut occupied = vec![false; k_max];
    for &l in km.labels.as_slice() {
        occupied[l as usize] = true;
    }
    let empty = occupied.iter().filter(|o| !**o).count();
    let tiny = if empty > 0 { EMPTY_CLUSTER_MASS / empty as f64 } else { 0.0 };
    let norm = 1.0 / (1.0 + if empty > 0 { EMPTY_CLUSTER_MASS } else { 0.0 });
    let mut resp = vec![0.0; n * k_max];
    for (i, &l) in km.labels.as_slice().iter().enumerate() {
        let row = &mut resp[i * k_max..(i + 1) * k_max];
        for (c, r) in row.iter_mut().enumerate() {
            let raw = if c == l as usize {
                1.0
            } else if !occupied[c] {
                tiny
            } else {
                0.0
            };
            *r = raw * norm;
        }
    }
    let mut state = DpgmmState::from_responsibilities(y, prior, k_max, resp)?;
    state.init_seed = init_seed;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> EmbeddingMatrix {
        let mut rows = Vec::new();
        for i in 0..20 {
            let t = i as f64 * 0.37;
            rows.push([libm::sin(t) * 0.3, libm::cos(t * 1.3) * 0.3]);
            rows.push([8.0 + libm::cos(t) * 0.3, -3.0 + libm::sin(t * 0.7) * 0.3]);
        }
        EmbeddingMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn responsibilities_are_distributions_after_init() {
        let y = blobs();
        let config = DpgmmConfig { max_components: 10, ..DpgmmConfig::default() };
        let state = init_state(&y, &config, 3).unwrap();
        for i in 0..y.n() {
            let row = state.resp_row(i);
            assert!(row.iter().all(|&r| (0.0..=1.0).contains(&r)));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn init_is_deterministic() {
        let y = blobs();
        let config = DpgmmConfig::default();
        assert_eq!(init_state(&y, &config, 11).unwrap(), init_state(&y, &config, 11).unwrap());
    }

    #[test]
    fn two_points_fill_at_most_two_components() {
        let y = EmbeddingMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let state = init_state(&y, &DpgmmConfig::default(), 0).unwrap();
        let mass = state.component_mass();
        assert_eq!(mass.len(), 50);
        assert!(mass.iter().filter(|&&m| m > 0.5).count() <= 2);
        for i in 0..2 {
            assert!((state.resp_row(i).iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        let y = EmbeddingMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(init_state(&y, &DpgmmConfig::default(), 0), Err(Error::Precondition(_))));
        let y = EmbeddingMatrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!(init_state(&y, &DpgmmConfig::default(), 0).is_err());
    }
}
