//! Special functions needed by the variational updates.

use core::f64::consts::PI;

/// Digamma function for `x > 0`.
///
/// Shifts the argument above 10 with the recurrence, then uses the
/// asymptotic series (absolute error below 1e-14 there).
pub fn digamma(mut x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    acc + libm::log(x) - 0.5 * inv - series
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log of the multivariate gamma function `Γ_p(a)`.
pub fn ln_multigamma(a: f64, p: usize) -> f64 {
    let pf = p as f64;
    let mut s = pf * (pf - 1.0) / 4.0 * libm::log(PI);
    for i in 0..p {
        s += ln_gamma(a - 0.5 * i as f64);
    }
    s
}
