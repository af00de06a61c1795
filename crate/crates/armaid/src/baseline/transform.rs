//! Bijection between unconstrained vectors and the stationary region.
//!
//! Unconstrained coordinates map through tanh to partial autocorrelations in
//! (-1, 1), then through the step-up recursion to AR coefficients; every
//! output satisfies the root condition, and the inverse recovers the inputs
//! on the whole stationary region.

use crate::error::{Error, Result};

/// Partial autocorrelations -> AR coefficients (step-up recursion).
pub fn pacf_to_ar(partials: &[f64]) -> Vec<f64> {
    let p = partials.len();
    let mut y = vec![0.0f64; p];
    for k in 0..p {
        let rk = partials[k];
        let prev: Vec<f64> = y[..k].to_vec();
        for i in 0..k {
            y[i] = prev[i] - rk * prev[k - 1 - i];
        }
        y[k] = rk;
    }
    y
}

/// AR coefficients -> partial autocorrelations (step-down recursion).
/// Fails when the coefficients are not strictly stationary.
pub fn ar_to_pacf(phi: &[f64]) -> Result<Vec<f64>> {
    let p = phi.len();
    let mut y = phi.to_vec();
    let mut partials = vec![0.0f64; p];
    for k in (0..p).rev() {
        let rk = y[k];
        if rk.is_nan() || rk.abs() >= 1.0 {
            return Err(Error::UnstableCoefficients(rk.abs()));
        }
        partials[k] = rk;
        let denom = 1.0 - rk * rk;
        let cur: Vec<f64> = y[..k].to_vec();
        for i in 0..k {
            y[i] = (cur[i] + rk * cur[k - 1 - i]) / denom;
        }
    }
    Ok(partials)
}

/// Unconstrained vector -> stationary AR coefficients.
pub fn stationary_from_unconstrained(u: &[f64]) -> Vec<f64> {
    let partials: Vec<f64> = u.iter().map(|v| v.tanh()).collect();
    pacf_to_ar(&partials)
}

/// Stationary AR coefficients -> unconstrained vector (inverse of the
/// forward map within 1e-10 on its domain).
pub fn unconstrained_from_stationary(phi: &[f64]) -> Result<Vec<f64>> {
    Ok(ar_to_pacf(phi)?.iter().map(|r| r.atanh()).collect())
}
