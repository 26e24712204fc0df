use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{DpgmmConfig, PriorMeanMode, ScaleMatrixMode};
use crate::linalg;
use crate::{EmbeddingMatrix, Error, Result};

/// Prior hyperparameters resolved against a data set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prior {
    pub p: usize,
    /// Stick-breaking concentration `alpha`.
    pub concentration: f64,
    /// `m0`
    pub mean: Vec<f64>,
    /// `gamma`
    pub mean_precision: f64,
    /// `nu0`
    pub dof: f64,
    /// `W0`, row-major `p x p`.
    pub scale: Vec<f64>,
    /// `W0^{-1}`
    pub scale_inv: Vec<f64>,
    /// `ln |W0|`
    pub log_det_scale: f64,
}

impl Prior {
    pub fn from_data(y: &EmbeddingMatrix, config: &DpgmmConfig) -> Result<Self> {
        let (n, p) = (y.n(), y.p());
        config.validate(p)?;
        let dof = config.dof_for(p);
        let mut col_mean = vec![0.0; p];
        for row in y.rows() {
            for (m, v) in col_mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        col_mean.iter_mut().for_each(|m| *m /= n as f64);

        let mean = match config.prior_mean_mode {
            PriorMeanMode::Empirical => col_mean.clone(),
            PriorMeanMode::Zero => vec![0.0; p],
        };

        // W0^{-1} = nu0 * D^{-1}
        let scale_inv = match config.scale_matrix_mode {
            ScaleMatrixMode::Identity => {
                let mut s = vec![0.0; p * p];
                (0..p).for_each(|i| s[i * p + i] = dof);
                s
            }
            ScaleMatrixMode::EmpiricalPrecision => {
                let mut cov = vec![0.0; p * p];
                for row in y.rows() {
                    for i in 0..p {
                        let di = row[i] - col_mean[i];
                        for j in 0..p {
                            cov[i * p + j] += di * (row[j] - col_mean[j]);
                        }
                    }
                }
                let denom = (n.max(2) - 1) as f64;
                cov.iter_mut().for_each(|c| *c /= denom);
                let ridge = 1e-6 * linalg::trace(&cov, p) / p as f64;
                let ridge = if ridge > 0.0 { ridge } else { 1e-6 };
                for i in 0..p {
                    cov[i * p + i] += ridge;
                }
                cov.iter_mut().for_each(|c| *c *= dof);
                cov
            }
        };
        let (chol, _) = linalg::cholesky_repaired(&scale_inv, p)
            .ok_or_else(|| Error::Numerical(format!("prior scale matrix is not positive-definite for p = {p}")))?;
        let scale = linalg::inverse_from_cholesky(&chol, p);
        let log_det_scale = -linalg::log_det_from_cholesky(&chol, p);
        Ok(Self {
            p,
            concentration: config.concentration,
            mean,
            mean_precision: config.mean_precision,
            dof,
            scale,
            scale_inv,
            log_det_scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_precision_prior() {
        let y = EmbeddingMatrix::from_rows(&[[0.0, 0.0], [2.0, 0.0], [0.0, 4.0], [2.0, 4.0]]).unwrap();
        let prior = Prior::from_data(&y, &DpgmmConfig::default()).unwrap();
        assert_eq!(prior.mean, vec![1.0, 2.0]);
        assert_eq!(prior.dof, 2.0);
        // unbiased covariance: diag(4/3, 16/3), ridge 1e-6 * (20/3) / 2
        let ridge = 1e-6 * (20.0 / 3.0) / 2.0;
        assert!((prior.scale_inv[0] - 2.0 * (4.0 / 3.0 + ridge)).abs() < 1e-12);
        assert!((prior.scale_inv[3] - 2.0 * (16.0 / 3.0 + ridge)).abs() < 1e-12);
        assert!(prior.scale_inv[1].abs() < 1e-15);
        // nu0 * W0 is the empirical precision
        assert!((2.0 * prior.scale[0] - 1.0 / (4.0 / 3.0 + ridge)).abs() < 1e-12);
    }

    #[test]
    fn identity_and_zero_modes() {
        let y = EmbeddingMatrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let config = DpgmmConfig {
            scale_matrix_mode: ScaleMatrixMode::Identity,
            prior_mean_mode: PriorMeanMode::Zero,
            wishart_dof: Some(3.0),
            ..DpgmmConfig::default()
        };
        let prior = Prior::from_data(&y, &config).unwrap();
        assert_eq!(prior.mean, vec![0.0]);
        assert_eq!(prior.scale_inv, vec![3.0]);
        assert!((prior.scale[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((prior.log_det_scale + libm::log(3.0)).abs() < 1e-15);
    }

    #[test]
    fn constant_column_still_gets_a_valid_prior() {
        let y = EmbeddingMatrix::from_rows(&[[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]]).unwrap();
        let prior = Prior::from_data(&y, &DpgmmConfig::default()).unwrap();
        assert!(prior.log_det_scale.is_finite());
    }
}
