//! Output-space similarity kernel `1 / (1 + a t^(2b))` fitted to the
//! `min_dist` / `spread` profile.

use alloc::vec::Vec;

use crate::{Error, Result};

const SAMPLES: usize = 300;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveParams {
    pub a: f64,
    pub b: f64,
}

impl CurveParams {
    #[inline]
    pub fn kernel(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        1.0 / (1.0 + self.a * libm::pow(t, 2.0 * self.b))
    }
}

/// Target profile: 1 up to `min_dist`, then `exp(-(t - min_dist) / spread)`.
pub fn target_profile(t: f64, min_dist: f64, spread: f64) -> f64 {
    if t <= min_dist {
        1.0
    } else {
        libm::exp(-(t - min_dist) / spread)
    }
}

/// Least-squares fit of `(a, b)` on 300 points of `[0, 3 spread]`.
pub fn fit_curve_params(min_dist: f64, spread: f64) -> Result<CurveParams> {
    fit_curve_params_with_residual(min_dist, spread).map(|(c, _)| c)
}

/// Same as [`fit_curve_params`], also returning the RMS residual.
///
/// Levenberg-Marquardt from `(1, 1)`; steps that would make either
/// parameter non-positive are rejected like any uphill step.
pub fn fit_curve_params_with_residual(min_dist: f64, spread: f64) -> Result<(CurveParams, f64)> {
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("spread must be positive, got {spread}")));
    }
    if !(min_dist >= 0.0) || !min_dist.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("min_dist must be non-negative, got {min_dist}")));
    }
    let step = 3.0 * spread / (SAMPLES - 1) as f64;
    let ts: Vec<f64> = (0..SAMPLES).map(|i| i as f64 * step).collect();
    let target: Vec<f64> = ts.iter().map(|&t| target_profile(t, min_dist, spread)).collect();

    let sse = |a: f64, b: f64| -> f64 {
        let c = CurveParams { a, b };
        ts.iter()
            .zip(&target)
            .map(|(&t, &y)| {
                let r = c.kernel(t) - y;
                r * r
            })
            .sum()
    };

    let (mut a, mut b) = (1.0, 1.0);
    let mut cost = sse(a, b);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        // normal equations J^T J and J^T r
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&t, &y) in ts.iter().zip(&target) {
            if t <= 0.0 {
                continue;
            }
            let u = libm::pow(t, 2.0 * b);
            let denom = 1.0 + a * u;
            let f = 1.0 / denom;
            let r = f - y;
            let da = -u / (denom * denom);
            let db = -a * u * 2.0 * libm::log(t) / (denom * denom);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let (m11, m22) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m11 * m22 - jab * jab;
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m22 * ga - jab * gb) / det;
            let step_b = -(m11 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 {
                let new_cost = sse(na, nb);
                if new_cost <= cost {
                    let rel = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                    let small_step = step_a.abs() <= 1e-12 * a.abs() && step_b.abs() <= 1e-12 * b.abs();
                    a = na;
                    b = nb;
                    cost = new_cost;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if rel < 1e-14 || small_step {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left at machine precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { routine: "curve fit", iterations: MAX_ITER });
    }
    let rms = libm::sqrt(cost / SAMPLES as f64);
    if rms >= 0.05 {
        log::warn!("output kernel fit for min_dist={min_dist}, spread={spread} has RMS residual {rms:.4}");
    }
    Ok((CurveParams { a, b }, rms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_one_at_zero_and_decreasing() {
        for c in [CurveParams { a: 0.3, b: 0.6 }, CurveParams { a: 2.0, b: 1.8 }] {
            assert_eq!(c.kernel(0.0), 1.0);
            let grid: Vec<f64> = (0..200).map(|i| c.kernel(i as f64 * 0.05)).collect();
            assert!(grid.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn rejects_bad_spread() {
        assert!(fit_curve_params(0.1, 0.0).is_err());
        assert!(fit_curve_params(-0.1, 1.0).is_err());
    }

    #[test]
    fn fits_have_small_residual() {
        for &(md, sp) in &[(0.5, 1.0), (0.0, 1.0), (0.1, 1.0), (0.25, 2.0)] {
            let (_, rms) = fit_curve_params_with_residual(md, sp).unwrap();
            assert!(rms < 0.05, "min_dist={md}, spread={sp}: rms {rms}");
        }
    }
}
