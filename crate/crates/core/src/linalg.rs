//! Dense kernels for the small symmetric matrices that show up in the mixture
//! updates (`p x p`) and in the Rayleigh-Ritz step of the spectral solver.
//!
//! Matrices are row-major `&[f64]` slices of length `m * m`.

use alloc::vec;
use alloc::vec::Vec;

/// Lower Cholesky factor of a symmetric positive-definite matrix, or `None`
/// when a pivot is not strictly positive.
pub fn cholesky(a: &[f64], m: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), m * m);
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * m + i] = libm::sqrt(s);
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Some(l)
}

/// Cholesky with a single ridge repair: on failure, `1e-8 * trace / m` is
/// added to the diagonal and the factorization retried once.
pub fn cholesky_repaired(a: &[f64], m: usize) -> Option<(Vec<f64>, bool)> {
    if let Some(l) = cholesky(a, m) {
        return Some((l, false));
    }
    let ridge = 1e-8 * trace(a, m).abs().max(f64::MIN_POSITIVE) / m as f64;
    let mut repaired = a.to_vec();
    for i in 0..m {
        repaired[i * m + i] += ridge;
    }
    cholesky(&repaired, m).map(|l| (l, true))
}

pub fn trace(a: &[f64], m: usize) -> f64 {
    (0..m).map(|i| a[i * m + i]).sum()
}

/// `ln |A|` from the Cholesky factor of `A`.
pub fn log_det_from_cholesky(l: &[f64], m: usize) -> f64 {
    2.0 * (0..m).map(|i| libm::log(l[i * m + i])).sum::<f64>()
}

/// Solves `L x = b` in place.
pub fn forward_substitute(l: &[f64], m: usize, b: &mut [f64]) {
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * m + k] * b[k];
        }
        b[i] = s / l[i * m + i];
    }
}

/// Solves `L^T x = b` in place.
pub fn backward_substitute_transposed(l: &[f64], m: usize, b: &mut [f64]) {
    for i in (0..m).rev() {
        let mut s = b[i];
        for k in i + 1..m {
            s -= l[k * m + i] * b[k];
        }
        b[i] = s / l[i * m + i];
    }
}

/// `x^T A^{-1} x` given the Cholesky factor `L` of `A`. `scratch` must have
/// length `m`.
pub fn inverse_quadratic_form(l: &[f64], m: usize, x: &[f64], scratch: &mut [f64]) -> f64 {
    scratch.copy_from_slice(x);
    forward_substitute(l, m, scratch);
    scratch.iter().map(|v| v * v).sum()
}

/// `A^{-1}` from the Cholesky factor of `A`; symmetrized on output.
pub fn inverse_from_cholesky(l: &[f64], m: usize) -> Vec<f64> {
    let mut inv = vec![0.0; m * m];
    let mut col = vec![0.0; m];
    for j in 0..m {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        forward_substitute(l, m, &mut col);
        backward_substitute_transposed(l, m, &mut col);
        for i in 0..m {
            inv[i * m + j] = col[i];
        }
    }
    symmetrize(&mut inv, m);
    inv
}

pub fn symmetrize(a: &mut [f64], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            let v = 0.5 * (a[i * m + j] + a[j * m + i]);
            a[i * m + j] = v;
            a[j * m + i] = v;
        }
    }
}

/// `x^T A y` for a general square `A`.
pub fn bilinear(a: &[f64], m: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            row += a[i * m + j] * y[j];
        }
        s += x[i] * row;
    }
    s
}

/// `tr(A B)` for square matrices.
pub fn trace_of_product(a: &[f64], b: &[f64], m: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..m {
        for k in 0..m {
            s += a[i * m + k] * b[k * m + i];
        }
    }
    s
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// the columns of a row-major `m x m` matrix.
pub fn symmetric_eigen(a: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[j * m + j].total_cmp(&a[i * m + i]));
    let values = order.iter().map(|&i| a[i * m + i]).collect();
    let mut vectors = vec![0.0; m * m];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..m {
            vectors[k * m + col] = v[k * m + src];
        }
    }
    (values, vectors)
}
