//! Reference log-density via the dense covariance matrix.
//!
//! Builds the full n x n Toeplitz covariance from the theoretical
//! autocovariances and evaluates the multivariate-normal log-density by
//! Cholesky factorization. Quadratic in memory and cubic in time, so only
//! suitable for short series; it shares no code with the state-space filter
//! and serves as its independent check.

use super::acov::arma_autocovariances;
use crate::error::{Error, Result};

pub fn dense_gaussian_loglik(
    series: &[f64],
    phi: &[f64],
    theta: &[f64],
    sigma2: f64,
) -> Result<f64> {
    let n = series.len();
    if n == 0 {
        return Err(Error::SeriesTooShort { need: 1, got: 0 });
    }
    let g = arma_autocovariances(phi, theta, sigma2, n - 1)?;
    let mut cov = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            cov[i * n + j] = g[i.abs_diff(j)];
        }
    }
    let mut chol = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = cov[i * n + j];
            for k in 0..j {
                acc -= chol[i * n + k] * chol[j * n + k];
            }
            if i == j {
                if acc <= 0.0 {
                    return Err(Error::FilterNotPositiveDefinite {
                        step: i,
                        variance: acc,
                    });
                }
                chol[i * n + i] = acc.sqrt();
            } else {
                chol[i * n + j] = acc / chol[j * n + j];
            }
        }
    }
    let mut logdet = 0.0;
    for i in 0..n {
        logdet += chol[i * n + i].ln();
    }
    let mut y = series.to_vec();
    for i in 0..n {
        let mut acc = y[i];
        for k in 0..i {
            acc -= chol[i * n + k] * y[k];
        }
        y[i] = acc / chol[i * n + i];
    }
    let quad: f64 = y.iter().map(|v| v * v).sum();
    Ok(-0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() - logdet - 0.5 * quad)
}
