//! Closed-form coordinate-ascent updates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::stick::expected_log_weights;
use super::{ComponentPosterior, DpgmmState};
use crate::{linalg, EmbeddingMatrix, Error, Result};

/// Components with less responsibility mass than this revert to the prior.
pub(crate) const EMPTY_MASS: f64 = 1e-10;

/// Recomputes `q(z)` given the stick and component posteriors.
///
/// `ln rho_nk = E[ln pi_k] + E[ln|Lambda_k|]/2 - p ln(2 pi)/2
///              - (p/beta_k + nu_k (y_n - m_k)^T W_k (y_n - m_k))/2`,
/// normalized per row with log-sum-exp.
pub fn update_responsibilities(state: &mut DpgmmState, y: &EmbeddingMatrix) -> Result<()> {
    check_shape(state, y)?;
    let log_rho = log_rho(state, y)?;
    let k_max = state.max_components;
    for (row_out, row_in) in state.responsibilities.chunks_exact_mut(k_max).zip(log_rho.chunks_exact(k_max)) {
        let max = row_in.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (o, &l) in row_out.iter_mut().zip(row_in) {
            *o = libm::exp(l - max);
            sum += *o;
        }
        let inv = 1.0 / sum;
        row_out.iter_mut().for_each(|o| *o *= inv);
    }
    Ok(())
}

/// Unnormalized log responsibilities, `n x K`.
pub(crate) fn log_rho(state: &DpgmmState, y: &EmbeddingMatrix) -> Result<Vec<f64>> {
    let (p, k_max) = (state.p, state.max_components);
    let log_pi = expected_log_weights(&state.beta_params);
    let half_log_2pi = 0.5 * p as f64 * libm::log(2.0 * PI);
    let constants: Vec<f64> = state
        .components
        .iter()
        .zip(&log_pi)
        .map(|(c, lp)| lp + 0.5 * c.expected_log_det_precision() - half_log_2pi - 0.5 * p as f64 / c.beta)
        .collect();
    if let Some(k) = constants.iter().position(|c| !c.is_finite()) {
        return Err(Error::Numerical(format!("non-finite expected log weight or log-determinant in component {k}")));
    }
    let mut out = vec![0.0; y.n() * k_max];
    let mut diff = vec![0.0; p];
    let mut scratch = vec![0.0; p];
    for (i, row) in y.rows().enumerate() {
        for (k, c) in state.components.iter().enumerate() {
            for ((d, a), b) in diff.iter_mut().zip(row).zip(&c.mean) {
                *d = a - b;
            }
            let quad = c.dof * linalg::inverse_quadratic_form(&c.scale_inv_chol, p, &diff, &mut scratch);
            let v = constants[k] - 0.5 * quad;
            if !v.is_finite() {
                return Err(Error::Numerical(format!("non-finite log responsibility for sample {i} in component {k}")));
            }
            out[i * k_max + k] = v;
        }
    }
    Ok(out)
}

/// Weighted sufficient statistics of one component.
pub(crate) struct SuffStats {
    pub mass: f64,
    pub mean: Vec<f64>,
    /// `N_k S_k`, the weighted scatter about `mean`.
    pub scatter: Vec<f64>,
}

pub(crate) fn sufficient_stats(state: &DpgmmState, y: &EmbeddingMatrix) -> Vec<SuffStats> {
    let (p, k_max) = (state.p, state.max_components);
    let mass = state.component_mass();
    let mut means = vec![0.0; k_max * p];
    for (i, row) in y.rows().enumerate() {
        for (k, &r) in state.resp_row(i).iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            for (m, v) in means[k * p..(k + 1) * p].iter_mut().zip(row) {
                *m += r * v;
            }
        }
    }
    for k in 0..k_max {
        if mass[k] > 0.0 {
            means[k * p..(k + 1) * p].iter_mut().for_each(|m| *m /= mass[k]);
        }
    }
    let mut scatter = vec![0.0; k_max * p * p];
    let mut diff = vec![0.0; p];
    for (i, row) in y.rows().enumerate() {
        for (k, &r) in state.resp_row(i).iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            for ((d, a), b) in diff.iter_mut().zip(row).zip(&means[k * p..(k + 1) * p]) {
                *d = a - b;
            }
            let s = &mut scatter[k * p * p..(k + 1) * p * p];
            for a in 0..p {
                for b in 0..p {
                    s[a * p + b] += r * diff[a] * diff[b];
                }
            }
        }
    }
    (0..k_max)
        .map(|k| SuffStats {
            mass: mass[k],
            mean: means[k * p..(k + 1) * p].to_vec(),
            scatter: scatter[k * p * p..(k + 1) * p * p].to_vec(),
        })
        .collect()
}

/// Recomputes the stick and Normal-Wishart posteriors given `q(z)`.
pub fn update_components(state: &mut DpgmmState, y: &EmbeddingMatrix) -> Result<()> {
    check_shape(state, y)?;
    let p = state.p;
    let stats = sufficient_stats(state, y);
    let prior = &state.prior;
    let (alpha, gamma) = (prior.concentration, prior.mean_precision);

    let mut tail = 0.0;
    for k in (0..state.max_components).rev() {
        state.beta_params[k] = (1.0 + stats[k].mass, alpha + tail);
        tail += stats[k].mass;
    }

    for (k, st) in stats.iter().enumerate() {
        if st.mass < EMPTY_MASS {
            state.components[k] = ComponentPosterior::from_prior(prior)?;
            continue;
        }
        let nk = st.mass;
        let beta = gamma + nk;
        let mean: Vec<f64> = prior.mean.iter().zip(&st.mean).map(|(m0, xb)| (gamma * m0 + nk * xb) / beta).collect();
        let dof = prior.dof + nk;
        let shrink = gamma * nk / (gamma + nk);
        let mut scale_inv = prior.scale_inv.clone();
        for a in 0..p {
            let da = st.mean[a] - prior.mean[a];
            for b in 0..p {
                let db = st.mean[b] - prior.mean[b];
                scale_inv[a * p + b] += st.scatter[a * p + b] + shrink * da * db;
            }
        }
        linalg::symmetrize(&mut scale_inv, p);
        let (chol, repaired) = linalg::cholesky_repaired(&scale_inv, p).ok_or_else(|| {
            Error::Numerical(format!("posterior scale of component {k} is not positive-definite (mass {nk:.3e})"))
        })?;
        if repaired {
            log::warn!("ridge-repaired the posterior scale of component {k}");
        }
        state.components[k] = ComponentPosterior {
            mean,
            beta,
            scale: linalg::inverse_from_cholesky(&chol, p),
            dof,
            log_det_scale: -linalg::log_det_from_cholesky(&chol, p),
            scale_inv_chol: chol,
        };
    }
    Ok(())
}

fn check_shape(state: &DpgmmState, y: &EmbeddingMatrix) -> Result<()> {
    if y.n() != state.n {
        return Err(Error::DimensionMismatch { expected: state.n, found: y.n(), what: "sample count" });
    }
    if y.p() != state.p {
        return Err(Error::DimensionMismatch { expected: state.p, found: y.p(), what: "embedding dimension" });
    }
    Ok(())
}
