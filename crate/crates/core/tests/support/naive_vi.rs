//! Scalar re-implementation of the variational updates, written from the
//! textbook formulas with explicit matrices and Gauss-Jordan inversion.

#![allow(dead_code, clippy::needless_range_loop)]

use statrs::function::gamma::{digamma, ln_gamma};
use std::f64::consts::PI;

pub type Mat = Vec<Vec<f64>>;

pub fn inverse(a: &Mat) -> Mat {
    let p = a.len();
    let mut m = a.clone();
    let mut inv: Mat = (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..p {
        let pivot = (col..p).max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap()).unwrap();
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let d = m[col][col];
        for j in 0..p {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..p {
            if r != col {
                let f = m[r][col];
                for j in 0..p {
                    m[r][j] -= f * m[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

pub fn det(a: &Mat) -> f64 {
    let p = a.len();
    let mut m = a.clone();
    let mut d = 1.0;
    for col in 0..p {
        let pivot = (col..p).max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap()).unwrap();
        if pivot != col {
            m.swap(col, pivot);
            d = -d;
        }
        d *= m[col][col];
        for r in col + 1..p {
            let f = m[r][col] / m[col][col];
            for j in col..p {
                m[r][j] -= f * m[col][j];
            }
        }
    }
    d
}

fn quad(w: &Mat, x: &[f64]) -> f64 {
    let p = x.len();
    let mut s = 0.0;
    for i in 0..p {
        for j in 0..p {
            s += x[i] * w[i][j] * x[j];
        }
    }
    s
}

fn trace_prod(a: &Mat, b: &Mat) -> f64 {
    let p = a.len();
    let mut s = 0.0;
    for i in 0..p {
        for j in 0..p {
            s += a[i][j] * b[j][i];
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct NaivePrior {
    pub alpha: f64,
    pub m0: Vec<f64>,
    pub gamma: f64,
    pub nu0: f64,
    pub w0: Mat,
}

#[derive(Debug, Clone)]
pub struct NaiveComponent {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub m: Vec<f64>,
    pub nu: f64,
    pub w: Mat,
}

/// Empirical covariance (unbiased) plus `1e-6 * trace / p` on the diagonal,
/// scaled by `nu0`; this is `W0^{-1}`.
pub fn prior_scale_inverse(y: &[Vec<f64>], nu0: f64) -> Mat {
    let n = y.len() as f64;
    let p = y[0].len();
    let mean: Vec<f64> = (0..p).map(|j| y.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            cov[i][j] = y.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0);
        }
    }
    let tr: f64 = (0..p).map(|i| cov[i][i]).sum();
    for i in 0..p {
        cov[i][i] += 1e-6 * tr / p as f64;
    }
    cov.iter().map(|r| r.iter().map(|v| v * nu0).collect()).collect()
}

pub fn m_step(y: &[Vec<f64>], r: &[Vec<f64>], prior: &NaivePrior) -> Vec<NaiveComponent> {
    let n = y.len();
    let p = y[0].len();
    let k_max = r[0].len();
    let mass: Vec<f64> = (0..k_max).map(|k| (0..n).map(|i| r[i][k]).sum()).collect();
    let w0_inv = inverse(&prior.w0);
    (0..k_max)
        .map(|k| {
            let nk = mass[k];
            let a = 1.0 + nk;
            let b = prior.alpha + mass[k + 1..].iter().sum::<f64>();
            if nk < 1e-10 {
                // the stick still sees the mass of later components
                return NaiveComponent {
                    a,
                    b,
                    beta: prior.gamma,
                    m: prior.m0.clone(),
                    nu: prior.nu0,
                    w: prior.w0.clone(),
                };
            }
            let xbar: Vec<f64> = (0..p).map(|j| (0..n).map(|i| r[i][k] * y[i][j]).sum::<f64>() / nk).collect();
            let mut s = vec![vec![0.0; p]; p];
            for i in 0..n {
                for u in 0..p {
                    for v in 0..p {
                        s[u][v] += r[i][k] * (y[i][u] - xbar[u]) * (y[i][v] - xbar[v]) / nk;
                    }
                }
            }
            let beta = prior.gamma + nk;
            let m: Vec<f64> = (0..p).map(|j| (prior.gamma * prior.m0[j] + nk * xbar[j]) / beta).collect();
            let nu = prior.nu0 + nk;
            let c = prior.gamma * nk / (prior.gamma + nk);
            let mut winv = w0_inv.clone();
            for u in 0..p {
                for v in 0..p {
                    winv[u][v] += nk * s[u][v] + c * (xbar[u] - prior.m0[u]) * (xbar[v] - prior.m0[v]);
                }
            }
            NaiveComponent { a, b, beta, m, nu, w: inverse(&winv) }
        })
        .collect()
}

fn e_log_det_lambda(c: &NaiveComponent) -> f64 {
    let p = c.m.len();
    (1..=p).map(|i| digamma((c.nu + 1.0 - i as f64) / 2.0)).sum::<f64>() + p as f64 * 2f64.ln() + det(&c.w).ln()
}

/// `E[ln pi_k]` with the last stick fixed at 1.
pub fn e_log_pi(comps: &[NaiveComponent]) -> Vec<f64> {
    let k_max = comps.len();
    let mut out = Vec::with_capacity(k_max);
    let mut rest = 0.0;
    for (k, c) in comps.iter().enumerate() {
        let e_ln_v = digamma(c.a) - digamma(c.a + c.b);
        let e_ln_1mv = digamma(c.b) - digamma(c.a + c.b);
        if k + 1 == k_max {
            out.push(rest);
        } else {
            out.push(e_ln_v + rest);
            rest += e_ln_1mv;
        }
    }
    out
}

pub fn log_rho(y: &[Vec<f64>], comps: &[NaiveComponent]) -> Vec<Vec<f64>> {
    let p = y[0].len() as f64;
    let elp = e_log_pi(comps);
    y.iter()
        .map(|yn| {
            comps
                .iter()
                .zip(&elp)
                .map(|(c, &lp)| {
                    let d: Vec<f64> = yn.iter().zip(&c.m).map(|(a, b)| a - b).collect();
                    let eq = p / c.beta + c.nu * quad(&c.w, &d);
                    lp + 0.5 * e_log_det_lambda(c) - 0.5 * p * (2.0 * PI).ln() - 0.5 * eq
                })
                .collect()
        })
        .collect()
}

pub fn e_step(y: &[Vec<f64>], comps: &[NaiveComponent]) -> Vec<Vec<f64>> {
    log_rho(y, comps)
        .into_iter()
        .map(|row| {
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - mx).exp()).sum();
            row.iter().map(|v| (v - mx).exp() / z).collect()
        })
        .collect()
}

fn ln_wishart_norm(w: &Mat, nu: f64) -> f64 {
    let p = w.len() as f64;
    let ln_gamma_p = p * (p - 1.0) / 4.0 * PI.ln() + (0..w.len()).map(|i| ln_gamma((nu - i as f64) / 2.0)).sum::<f64>();
    -(nu / 2.0) * det(w).ln() - (nu * p / 2.0) * 2f64.ln() - ln_gamma_p
}

/// ELBO in the aggregated textbook form: per-component statistics instead of
/// per-sample sums for the likelihood.
pub fn elbo(y: &[Vec<f64>], r: &[Vec<f64>], comps: &[NaiveComponent], prior: &NaivePrior) -> f64 {
    let n = y.len();
    let p = y[0].len();
    let pf = p as f64;
    let k_max = comps.len();
    let elp = e_log_pi(comps);
    let w0_inv = inverse(&prior.w0);
    let mut total = 0.0;
    for (k, c) in comps.iter().enumerate() {
        let nk: f64 = (0..n).map(|i| r[i][k]).sum();
        let eld = e_log_det_lambda(c);
        if nk > 0.0 {
            let xbar: Vec<f64> = (0..p).map(|j| (0..n).map(|i| r[i][k] * y[i][j]).sum::<f64>() / nk).collect();
            let mut s = vec![vec![0.0; p]; p];
            for i in 0..n {
                for u in 0..p {
                    for v in 0..p {
                        s[u][v] += r[i][k] * (y[i][u] - xbar[u]) * (y[i][v] - xbar[v]) / nk;
                    }
                }
            }
            let d: Vec<f64> = xbar.iter().zip(&c.m).map(|(a, b)| a - b).collect();
            total += 0.5
                * nk
                * (eld - pf / c.beta - c.nu * trace_prod(&s, &c.w) - c.nu * quad(&c.w, &d) - pf * (2.0 * PI).ln());
        }
        // assignments
        for i in 0..n {
            total += r[i][k] * elp[k];
            if r[i][k] > 0.0 {
                total -= r[i][k] * r[i][k].ln();
            }
        }
        // sticks, all but the pinned last one
        if k + 1 < k_max {
            let e_ln_1mv = digamma(c.b) - digamma(c.a + c.b);
            let e_ln_v = digamma(c.a) - digamma(c.a + c.b);
            total += prior.alpha.ln() + (prior.alpha - 1.0) * e_ln_1mv;
            let ln_beta_fn = ln_gamma(c.a) + ln_gamma(c.b) - ln_gamma(c.a + c.b);
            total -= (c.a - 1.0) * e_ln_v + (c.b - 1.0) * e_ln_1mv - ln_beta_fn;
        }
        // Normal-Wishart prior
        let dm: Vec<f64> = c.m.iter().zip(&prior.m0).map(|(a, b)| a - b).collect();
        total += 0.5
            * (pf * (prior.gamma / (2.0 * PI)).ln() + eld
                - pf * prior.gamma / c.beta
                - prior.gamma * c.nu * quad(&c.w, &dm));
        total += ln_wishart_norm(&prior.w0, prior.nu0) + 0.5 * (prior.nu0 - pf - 1.0) * eld
            - 0.5 * c.nu * trace_prod(&w0_inv, &c.w);
        // Normal-Wishart entropy
        let entropy_lambda = -ln_wishart_norm(&c.w, c.nu) - 0.5 * (c.nu - pf - 1.0) * eld + 0.5 * c.nu * pf;
        total -= 0.5 * eld + 0.5 * pf * (c.beta / (2.0 * PI)).ln() - 0.5 * pf - entropy_lambda;
    }
    total
}
