//! Truncated stick-breaking Dirichlet-process Gaussian mixture fitted by
//! mean-field coordinate-ascent variational inference.
//!
//! Generative model, with `K` the truncation level:
//!
//! ```text
//! phi_k ~ Beta(1, alpha)          k < K,  phi_K = 1
//! pi_k  = phi_k * prod_{j<k} (1 - phi_j)
//! Lambda_k ~ Wishart(W0, nu0)
//! mu_k | Lambda_k ~ N(m0, (gamma * Lambda_k)^-1)
//! z_n ~ Categorical(pi)
//! y_n | z_n = k ~ N(mu_k, Lambda_k^-1)
//! ```
//!
//! The variational family factorizes into Beta posteriors over the stick
//! fractions, Normal-Wishart posteriors over each component and categorical
//! responsibilities over the assignments. Each factor has a closed-form
//! optimum given the others, so alternating [`update_responsibilities`] and
//! [`update_components`] never decreases the [`elbo`].

mod elbo;
mod prior;
mod result;
mod state;
mod stick;
mod updates;

pub use elbo::{elbo, elbo_terms, ElboTerms};
pub use prior::Prior;
pub use result::{extract_result, ClusterResult};
pub use state::{init_state, ComponentPosterior, DpgmmState};
pub use stick::{expected_log_weights, expected_weights, stick_breaking_weights};
pub use updates::{update_components, update_responsibilities};

use alloc::format;
use alloc::vec::Vec;

use crate::{EmbeddingMatrix, Error, Result};

/// Source of the prior mean `m0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PriorMeanMode {
    /// Column means of the data.
    #[default]
    Empirical,
    Zero,
}

/// Source of the Wishart scale. `W0 = D / nu0`, so the prior mean precision
/// `nu0 * W0` equals `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScaleMatrixMode {
    /// `D` = inverse of the (ridged) empirical covariance.
    #[default]
    EmpiricalPrecision,
    /// `D` = identity.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DpgmmConfig {
    /// Truncation level.
    pub max_components: usize,
    /// Dirichlet-process concentration.
    pub concentration: f64,
    /// Prior precision scaling of the component means.
    pub mean_precision: f64,
    /// Wishart degrees of freedom; `None` means the embedding dimension.
    pub wishart_dof: Option<f64>,
    pub scale_matrix_mode: ScaleMatrixMode,
    pub prior_mean_mode: PriorMeanMode,
    pub max_iter: usize,
    /// Number of k-means initializations, each fitted to convergence.
    pub n_init: usize,
    /// Stop when the relative ELBO change falls below this.
    pub convergence_tol: f64,
    pub seed: u64,
}

impl Default for DpgmmConfig {
    fn default() -> Self {
        Self {
            max_components: 50,
            concentration: 1.0 / 50.0,
            mean_precision: 0.01,
            wishart_dof: None,
            scale_matrix_mode: ScaleMatrixMode::EmpiricalPrecision,
            prior_mean_mode: PriorMeanMode::Empirical,
            max_iter: 200,
            n_init: 5,
            convergence_tol: 1e-4,
            seed: 0,
        }
    }
}

impl DpgmmConfig {
    pub fn dof_for(&self, p: usize) -> f64 {
        self.wishart_dof.unwrap_or(p as f64)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.max_components == 0 {
            return Err(Error::InvalidArgument("max_components must be at least 1".into()));
        }
        if !(self.concentration > 0.0) || !self.concentration.is_finite() {
            return Err(Error::InvalidArgument(format!("concentration must be > 0, got {}", self.concentration)));
        }
        if !(self.mean_precision > 0.0) || !self.mean_precision.is_finite() {
            return Err(Error::InvalidArgument(format!("mean_precision must be > 0, got {}", self.mean_precision)));
        }
        let dof = self.dof_for(p);
        if !(dof >= p as f64) || !dof.is_finite() {
            return Err(Error::InvalidArgument(format!("wishart_dof must be >= {p}, got {dof}")));
        }
        if self.n_init == 0 {
            return Err(Error::InvalidArgument("n_init must be at least 1".into()));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::InvalidArgument("convergence_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Fits `n_init` runs (init seeds `seed, seed+1, ...`) and returns the one
/// with the highest final ELBO, with its extracted clustering.
pub fn fit(y: &EmbeddingMatrix, config: &DpgmmConfig) -> Result<(DpgmmState, ClusterResult)> {
    config.validate(y.p())?;
    if y.n() < 2 {
        return Err(Error::Precondition("the mixture fit needs at least two samples".into()));
    }
    let prior = Prior::from_data(y, config)?;
    let run = |i: usize| fit_single(y, config, &prior, config.seed.wrapping_add(i as u64));

    #[cfg(feature = "parallel")]
    let runs: Vec<Result<DpgmmState>> = {
        use rayon::prelude::*;
        (0..config.n_init).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<DpgmmState>> = (0..config.n_init).map(run).collect();

    let mut best: Option<DpgmmState> = None;
    for state in runs {
        let state = state?;
        if best.as_ref().is_none_or(|b| state.final_elbo() > b.final_elbo()) {
            best = Some(state);
        }
    }
    let best = best.expect("n_init >= 1");
    let result = extract_result(&best, y);
    Ok((best, result))
}

/// One coordinate-ascent run from a k-means initialization.
pub fn fit_single(y: &EmbeddingMatrix, config: &DpgmmConfig, prior: &Prior, init_seed: u64) -> Result<DpgmmState> {
    let mut state = state::init_with_prior(y, config, prior.clone(), init_seed)?;
    let mut previous = elbo(&state, y)?;
    state.elbo_trace.push(previous);
    for _ in 0..config.max_iter {
        update_responsibilities(&mut state, y)?;
        update_components(&mut state, y)?;
        let current = elbo(&state, y)?;
        state.elbo_trace.push(current);
        state.iterations += 1;
        let change = (current - previous).abs() / previous.abs().max(f64::MIN_POSITIVE);
        previous = current;
        if change < config.convergence_tol {
            state.converged = true;
            break;
        }
    }
    log::debug!(
        "dpgmm run seed={init_seed}: {} iterations, elbo={previous:.6}, converged={}",
        state.iterations,
        state.converged
    );
    Ok(state)
}
