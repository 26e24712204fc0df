//! Stick-breaking weights and their variational expectations.

use alloc::format;
use alloc::vec::Vec;

use crate::special::digamma;
use crate::{Error, Result};

/// `pi_k = phi_k * prod_{j<k} (1 - phi_j)`.
///
/// The last stick fraction must be 1 (truncation), so the weights sum to one.
pub fn stick_breaking_weights(phi: &[f64]) -> Result<Vec<f64>> {
    if phi.is_empty() {
        return Err(Error::InvalidArgument("need at least one stick fraction".into()));
    }
    if let Some((k, v)) = phi.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("stick fraction {k} = {v} is outside [0, 1]")));
    }
    if phi[phi.len() - 1] != 1.0 {
        return Err(Error::InvalidArgument("the last stick fraction must be 1".into()));
    }
    let mut remaining = 1.0;
    Ok(phi
        .iter()
        .map(|&f| {
            let w = f * remaining;
            remaining *= 1.0 - f;
            w
        })
        .collect())
}

/// `E[ln pi_k]` under independent `Beta(a_k, b_k)` stick posteriors. The
/// last stick is fixed at 1, so its own Beta factor is ignored.
pub fn expected_log_weights(beta_params: &[(f64, f64)]) -> Vec<f64> {
    let k_max = beta_params.len();
    let mut out = Vec::with_capacity(k_max);
    let mut log_rest = 0.0;
    for (k, &(a, b)) in beta_params.iter().enumerate() {
        if k + 1 == k_max {
            out.push(log_rest);
        } else {
            let total = digamma(a + b);
            out.push(digamma(a) - total + log_rest);
            log_rest += digamma(b) - total;
        }
    }
    out
}

/// `E[pi_k]` under the stick posteriors.
pub fn expected_weights(beta_params: &[(f64, f64)]) -> Vec<f64> {
    let k_max = beta_params.len();
    let mut remaining = 1.0;
    beta_params
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let mean = if k + 1 == k_max { 1.0 } else { a / (a + b) };
            let w = mean * remaining;
            remaining *= 1.0 - mean;
            w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn closed_form_cases() {
        assert_eq!(stick_breaking_weights(&[1.0]).unwrap(), vec![1.0]);
        assert_eq!(stick_breaking_weights(&[0.5, 0.5, 1.0]).unwrap(), vec![0.5, 0.25, 0.25]);
        assert_eq!(stick_breaking_weights(&[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_invalid_fractions() {
        assert!(stick_breaking_weights(&[]).is_err());
        assert!(stick_breaking_weights(&[1.2, 1.0]).is_err());
        assert!(stick_breaking_weights(&[-0.1, 1.0]).is_err());
        assert!(stick_breaking_weights(&[0.3, 0.4]).is_err());
        assert!(stick_breaking_weights(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn expectations_for_single_stick() {
        assert_eq!(expected_log_weights(&[(3.0, 0.5)]), vec![0.0]);
        assert_eq!(expected_weights(&[(3.0, 0.5)]), vec![1.0]);
    }

    #[test]
    fn expected_weights_sum_to_one() {
        let params = [(2.0, 5.0), (1.5, 0.2), (7.0, 1.0), (1.0, 0.02)];
        let w = expected_weights(&params);
        assert!(w.iter().all(|&x| x >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // E[pi_0] = a/(a+b), E[pi_1] = a1/(a1+b1) * b0/(a0+b0)
        assert!((w[0] - 2.0 / 7.0).abs() < 1e-15);
        assert!((w[1] - 1.5 / 1.7 * 5.0 / 7.0).abs() < 1e-15);
    }
}
