//! Maximum-likelihood ARMA fitting with information criteria.

use super::kalman::{concentrated_loglik, filter_sums};
use super::simplex::nelder_mead;
use super::transform::{stationary_from_unconstrained, unconstrained_from_stationary};
use crate::arma::{poly_min_root_modulus, PolyRole};
use crate::error::{Error, Result};

const MAX_EVALS: usize = 2_000;
const SIMPLEX_TOL: f64 = 1e-8;
const INITIAL_STEP: f64 = 0.25;

/// A fitted zero-mean ARMA model with its criteria.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub p: usize,
    pub q: usize,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    /// Parameters counted by the criteria: p + q + 1 (innovation variance
    /// included, no mean term).
    pub fn k(&self) -> usize {
        self.p + self.q + 1
    }
}

/// Long-autoregression starting values: AR(m) residuals feed a least-squares
/// regression on lagged values and lagged residuals, and the estimates are
/// pushed inside the stationary/invertible region if they fall outside.
pub fn hannan_rissanen_init(
    series: &[f64],
    p: usize,
    q: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = series.len();
    if n <= 20 * (p + q + 1) {
        return Err(Error::SeriesTooShort {
            need: 20 * (p + q + 1) + 1,
            got: n,
        });
    }
    let msq = series.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if p == 0 && q == 0 {
        return Ok((Vec::new(), Vec::new(), msq.max(1e-12)));
    }

    let m = (20 + p + q).min(n / 5);
    let long_ar = levinson_long_ar(series, m);
    let mut resid = vec![0.0f64; n - m];
    for t in m..n {
        let mut e = series[t];
        for (i, &a) in long_ar.iter().enumerate() {
            e -= a * series[t - i - 1];
        }
        resid[t - m] = e;
    }

    // Least squares of x_t on p lagged values and q lagged residuals.
    let dim = p + q;
    let start = m + q;
    let rows = n - start;
    let mut xtx = vec![0.0f64; dim * dim];
    let mut xty = vec![0.0f64; dim];
    let mut regress_row = vec![0.0f64; dim];
    let mut ssy = 0.0;
    for t in start..n {
        for i in 0..p {
            regress_row[i] = series[t - i - 1];
        }
        for j in 0..q {
            regress_row[p + j] = resid[t - j - 1 - m];
        }
        for i in 0..dim {
            for j in 0..dim {
                xtx[i * dim + j] += regress_row[i] * regress_row[j];
            }
            xty[i] += regress_row[i] * series[t];
        }
        ssy += series[t] * series[t];
    }
    let mut beta = xty.clone();
    let solved = super::kalman::solve_dense(&mut xtx, &mut beta, dim).is_some();
    let (mut phi, mut theta, sigma2) = if solved {
        let phi: Vec<f64> = beta[..p].to_vec();
        let theta: Vec<f64> = beta[p..].to_vec();
        // Residual variance of the second-stage regression.
        let explained: f64 = xty.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let s2 = ((ssy - explained) / rows as f64).max(1e-12);
        (phi, theta, s2)
    } else {
        (vec![0.0; p], vec![0.0; q], msq.max(1e-12))
    };

    project_into_region(&mut phi, PolyRole::Ar)?;
    project_into_region(&mut theta, PolyRole::Ma)?;
    Ok((phi, theta, sigma2))
}

/// Shrinks lag-k coefficients by c^k until the roots clear the unit circle;
/// this scales every root outward by 1/c per pass.
fn project_into_region(coeffs: &mut [f64], role: PolyRole) -> Result<()> {
    if coeffs.is_empty() {
        return Ok(());
    }
    const C: f64 = 0.95;
    for _ in 0..600 {
        let m = poly_min_root_modulus(coeffs, role)?;
        if m > 1.01 {
            return Ok(());
        }
        let mut scale = 1.0;
        for v in coeffs.iter_mut() {
            scale *= C;
            *v *= scale;
        }
    }
    Err(Error::UnstableCoefficients(poly_min_root_modulus(
        coeffs, role,
    )?))
}

/// AR(m) coefficients by Levinson-Durbin on biased zero-mean autocovariances.
fn levinson_long_ar(series: &[f64], m: usize) -> Vec<f64> {
    let n = series.len();
    let mut c = vec![0.0f64; m + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for t in k..n {
            acc += series[t] * series[t - k];
        }
        *ck = acc / n as f64;
    }
    if c[0] <= 0.0 {
        return vec![0.0; m];
    }
    let mut a = vec![0.0f64; m];
    let mut prev = vec![0.0f64; m];
    let mut err = c[0];
    for k in 0..m {
        let mut acc = c[k + 1];
        for j in 0..k {
            acc -= prev[j] * c[k - j];
        }
        let reflect = acc / err;
        a[..k].copy_from_slice(&prev[..k]);
        for j in 0..k {
            a[j] = prev[j] - reflect * prev[k - 1 - j];
        }
        a[k] = reflect;
        err *= 1.0 - reflect * reflect;
        if err <= 0.0 {
            break;
        }
        prev[..=k].copy_from_slice(&a[..=k]);
    }
    a
}

/// Maximizes the exact likelihood over the transformed coefficient space
/// with the innovation variance concentrated out analytically.
pub fn fit_arma(series: &[f64], p: usize, q: usize) -> Result<FitResult> {
    let n = series.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { need: 2, got: n });
    }
    if 10 * (p + q) >= n {
        return Err(Error::InvalidArgument(format!(
            "orders ({p},{q}) too large for n = {n}"
        )));
    }

    if p == 0 && q == 0 {
        let sigma2 = (series.iter().map(|v| v * v).sum::<f64>() / n as f64).max(1e-300);
        let loglik = -0.5 * n as f64 * ((2.0 * std::f64::consts::PI).ln() + 1.0 + sigma2.ln());
        return Ok(finish(
            series.len(),
            p,
            q,
            Vec::new(),
            Vec::new(),
            sigma2,
            loglik,
            true,
            0,
        ));
    }

    let dim = p + q;
    let objective = |u: &[f64]| -> f64 {
        let (phi, theta) = decode(u, p, q);
        match filter_sums(series, &phi, &theta) {
            Ok(sums) => -concentrated_loglik(&sums).0,
            Err(_) => f64::INFINITY,
        }
    };

    // Starting point from the long-autoregression estimates when the series
    // is long enough; the origin (white noise) otherwise.
    let mut u0 = vec![0.0f64; dim];
    if let Ok((phi0, theta0, _)) = hannan_rissanen_init(series, p, q) {
        let neg_theta: Vec<f64> = theta0.iter().map(|v| -v).collect();
        if let (Ok(ua), Ok(um)) = (
            unconstrained_from_stationary(&phi0),
            unconstrained_from_stationary(&neg_theta),
        ) {
            u0[..p].copy_from_slice(&ua);
            u0[p..].copy_from_slice(&um);
        }
    }

    let res = nelder_mead(objective, &u0, INITIAL_STEP, SIMPLEX_TOL, MAX_EVALS);
    let (phi, theta) = decode(&res.x, p, q);
    let sums = match filter_sums(series, &phi, &theta) {
        Ok(s) => s,
        Err(_) => {
            return Ok(finish(
                n,
                p,
                q,
                phi,
                theta,
                f64::NAN,
                f64::NEG_INFINITY,
                false,
                res.evals,
            ))
        }
    };
    let (loglik, sigma2) = concentrated_loglik(&sums);
    let converged = res.converged && loglik.is_finite();
    Ok(finish(
        n, p, q, phi, theta, sigma2, loglik, converged, res.evals,
    ))
}

fn decode(u: &[f64], p: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    let phi = stationary_from_unconstrained(&u[..p]);
    let theta: Vec<f64> = stationary_from_unconstrained(&u[p..p + q])
        .iter()
        .map(|v| -v)
        .collect();
    (phi, theta)
}

fn finish(
    n: usize,
    p: usize,
    q: usize,
    phi: Vec<f64>,
    theta: Vec<f64>,
    sigma2: f64,
    loglik: f64,
    converged: bool,
    iterations: usize,
) -> FitResult {
    let k = (p + q + 1) as f64;
    FitResult {
        p,
        q,
        phi,
        theta,
        sigma2,
        loglik,
        aic: -2.0 * loglik + 2.0 * k,
        bic: -2.0 * loglik + k * (n as f64).ln(),
        converged,
        iterations,
    }
}
