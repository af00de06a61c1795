//! Theoretical ARMA autocovariances via the moving-average expansion.

use crate::arma::{poly_min_root_modulus, PolyRole, ROOT_MARGIN};
use crate::error::{Error, Result};

/// Truncation order of the MA(inf) expansion.
const TRUNCATION: usize = 10_000;

/// Autocovariances gamma(0..=max_lag) of a stationary, invertible ARMA
/// process, computed from the truncated MA(inf) weights.
pub fn arma_autocovariances(
    phi: &[f64],
    theta: &[f64],
    sigma2: f64,
    max_lag: usize,
) -> Result<Vec<f64>> {
    arma_autocovariances_with_tail(phi, theta, sigma2, max_lag).map(|(g, _)| g)
}

/// As [`arma_autocovariances`], also returning an upper bound on the
/// truncation error, estimated from the observed geometric decay of the
/// expansion weights.
pub fn arma_autocovariances_with_tail(
    phi: &[f64],
    theta: &[f64],
    sigma2: f64,
    max_lag: usize,
) -> Result<(Vec<f64>, f64)> {
    if !phi.is_empty() {
        let m = poly_min_root_modulus(phi, PolyRole::Ar)?;
        if m <= 1.0 + ROOT_MARGIN {
            return Err(Error::UnstableCoefficients(m));
        }
    }
    let p = phi.len();
    let q = theta.len();
    let horizon = TRUNCATION + max_lag;

    // psi_0 = 1, psi_j = theta_j + sum_i phi_i psi_{j-i}.
    let mut psi = vec![0.0f64; horizon + 1];
    psi[0] = 1.0;
    for j in 1..=horizon {
        let mut v = if j <= q { theta[j - 1] } else { 0.0 };
        for i in 1..=p.min(j) {
            v += phi[i - 1] * psi[j - i];
        }
        psi[j] = v;
    }

    let mut gamma = vec![0.0f64; max_lag + 1];
    for (k, g) in gamma.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..=(horizon - k) {
            acc += psi[j] * psi[j + k];
        }
        *g = sigma2 * acc;
    }

    // Tail estimate: beyond the horizon the weights decay at least
    // geometrically; read the rate off the last decade of computed weights.
    let abs_sum: f64 = psi.iter().map(|v| v.abs()).sum();
    let last = psi[horizon].abs();
    let earlier = psi[horizon - 10].abs();
    let tail = if last == 0.0 {
        0.0
    } else {
        let ratio = (last / earlier.max(f64::MIN_POSITIVE))
            .powf(0.1)
            .min(0.999_999);
        let tail_sum = last * ratio / (1.0 - ratio);
        sigma2 * tail_sum * (tail_sum + 2.0 * abs_sum)
    };
    Ok((gamma, tail))
}
