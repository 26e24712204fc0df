//! Evidence lower bound of the truncated mixture.

use alloc::format;
use alloc::vec;
use core::f64::consts::{LN_2, PI};

use super::stick::expected_log_weights;
use super::updates::log_rho;
use super::DpgmmState;
use crate::special::{digamma, ln_beta, ln_multigamma};
use crate::{linalg, EmbeddingMatrix, Error, Result};

/// The seven expectation terms whose sum is the ELBO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboTerms {
    /// `E[ln p(y | z, mu, Lambda)]`
    pub likelihood: f64,
    /// `E[ln p(z | phi)]`
    pub assignment_prior: f64,
    /// `-E[ln q(z)]`
    pub assignment_entropy: f64,
    /// `E[ln p(phi)]`
    pub stick_prior: f64,
    /// `-E[ln q(phi)]`
    pub stick_entropy: f64,
    /// `E[ln p(mu, Lambda)]`
    pub component_prior: f64,
    /// `-E[ln q(mu, Lambda)]`
    pub component_entropy: f64,
}

impl ElboTerms {
    pub fn total(&self) -> f64 {
        self.likelihood
            + self.assignment_prior
            + self.assignment_entropy
            + self.stick_prior
            + self.stick_entropy
            + self.component_prior
            + self.component_entropy
    }

    fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("likelihood", self.likelihood),
            ("assignment prior", self.assignment_prior),
            ("assignment entropy", self.assignment_entropy),
            ("stick prior", self.stick_prior),
            ("stick entropy", self.stick_entropy),
            ("component prior", self.component_prior),
            ("component entropy", self.component_entropy),
        ]
    }
}

pub fn elbo(state: &DpgmmState, y: &EmbeddingMatrix) -> Result<f64> {
    let terms = elbo_terms(state, y)?;
    let total = terms.total();
    if !total.is_finite() {
        return Err(Error::Numerical("non-finite ELBO".into()));
    }
    Ok(total)
}

pub fn elbo_terms(state: &DpgmmState, y: &EmbeddingMatrix) -> Result<ElboTerms> {
    let (p, k_max) = (state.p, state.max_components);
    let pf = p as f64;
    let prior = &state.prior;
    let log_pi = expected_log_weights(&state.beta_params);

    // log_rho_nk = E[ln pi_k] + (per-sample expected log-likelihood under k)
    let log_rho = log_rho(state, y)?;
    let mut likelihood = 0.0;
    let mut assignment_prior = 0.0;
    let mut assignment_entropy = 0.0;
    for (row_r, row_l) in state.responsibilities.chunks_exact(k_max).zip(log_rho.chunks_exact(k_max)) {
        for k in 0..k_max {
            let r = row_r[k];
            if r <= 0.0 {
                continue;
            }
            likelihood += r * (row_l[k] - log_pi[k]);
            assignment_prior += r * log_pi[k];
            assignment_entropy -= r * libm::log(r);
        }
    }

    let alpha = prior.concentration;
    let mut stick_prior = 0.0;
    let mut stick_entropy = 0.0;
    for &(a, b) in &state.beta_params[..k_max - 1] {
        let total = digamma(a + b);
        let e_log_phi = digamma(a) - total;
        let e_log_rest = digamma(b) - total;
        stick_prior += libm::log(alpha) + (alpha - 1.0) * e_log_rest;
        stick_entropy -= (a - 1.0) * e_log_phi + (b - 1.0) * e_log_rest - ln_beta(a, b);
    }

    let gamma = prior.mean_precision;
    let log_norm_prior = wishart_log_norm(prior.log_det_scale, prior.dof, p);
    let mut component_prior = 0.0;
    let mut component_entropy = 0.0;
    let mut diff = vec![0.0; p];
    for c in &state.components {
        let e_log_det = c.expected_log_det_precision();
        for ((d, a), b) in diff.iter_mut().zip(&c.mean).zip(&prior.mean) {
            *d = a - b;
        }
        let mean_term = gamma * c.dof * linalg::bilinear(&c.scale, p, &diff, &diff);
        component_prior += 0.5 * (pf * libm::log(gamma / (2.0 * PI)) + e_log_det - pf * gamma / c.beta - mean_term)
            + log_norm_prior
            + 0.5 * (prior.dof - pf - 1.0) * e_log_det
            - 0.5 * c.dof * linalg::trace_of_product(&prior.scale_inv, &c.scale, p);

        let wishart_entropy =
            -wishart_log_norm(c.log_det_scale, c.dof, p) - 0.5 * (c.dof - pf - 1.0) * e_log_det + 0.5 * c.dof * pf;
        let e_log_q = 0.5 * e_log_det + 0.5 * pf * libm::log(c.beta / (2.0 * PI)) - 0.5 * pf - wishart_entropy;
        component_entropy -= e_log_q;
    }

    let terms = ElboTerms {
        likelihood,
        assignment_prior,
        assignment_entropy,
        stick_prior,
        stick_entropy,
        component_prior,
        component_entropy,
    };
    if let Some((name, _)) = terms.named().iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite ELBO term: {name}")));
    }
    Ok(terms)
}

/// `ln B(W, nu)`, the log normalizer of a Wishart density.
pub(crate) fn wishart_log_norm(log_det_scale: f64, dof: f64, p: usize) -> f64 {
    -0.5 * dof * log_det_scale - 0.5 * dof * p as f64 * LN_2 - ln_multigamma(0.5 * dof, p)
}
