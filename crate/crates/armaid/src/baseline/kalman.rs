//! Exact Gaussian ARMA log-likelihood via state-space filtering.
//!
//! The model is cast in the canonical form with state dimension
//! r = max(p, q+1): transition matrix in companion layout (AR coefficients
//! down the first column, ones on the superdiagonal), noise-input vector
//! (1, theta_1, .., theta_q, 0, ..), observation picking the first state.
//! The filter starts from the exact stationary state covariance, obtained by
//! solving the discrete Lyapunov equation, and runs with unit innovation
//! variance; the likelihood at any sigma2 follows by rescaling.

use crate::arma::{poly_min_root_modulus, PolyRole, ROOT_MARGIN};
use crate::error::{Error, Result};

const F_MIN: f64 = 1e-12;

/// Prediction-error sums of the unit-variance filter pass.
#[derive(Clone, Copy, Debug)]
pub struct FilterSums {
    pub sum_ln_f: f64,
    pub sum_v2_over_f: f64,
    pub n: usize,
}

struct StateSpace {
    r: usize,
    phi: Vec<f64>,
    rvec: Vec<f64>,
}

impl StateSpace {
    fn new(phi: &[f64], theta: &[f64]) -> Self {
        let p = phi.len();
        let q = theta.len();
        let r = p.max(q + 1);
        let mut phi_pad = vec![0.0; r];
        phi_pad[..p].copy_from_slice(phi);
        let mut rvec = vec![0.0; r];
        rvec[0] = 1.0;
        rvec[1..=q].copy_from_slice(theta);
        StateSpace {
            r,
            phi: phi_pad,
            rvec,
        }
    }

    /// B = T * M for companion T: row i is phi_{i+1} * M[0,:] + M[i+1,:].
    fn companion_left(&self, m: &[f64], out: &mut [f64]) {
        let r = self.r;
        for i in 0..r {
            for j in 0..r {
                let shifted = if i + 1 < r { m[(i + 1) * r + j] } else { 0.0 };
                out[i * r + j] = self.phi[i] * m[j] + shifted;
            }
        }
    }

    /// C = B * T': column j is phi_{j+1} * B[:,0] + B[:,j+1].
    fn companion_right(&self, b: &[f64], out: &mut [f64]) {
        let r = self.r;
        for i in 0..r {
            for j in 0..r {
                let shifted = if j + 1 < r { b[i * r + j + 1] } else { 0.0 };
                out[i * r + j] = self.phi[j] * b[i * r] + shifted;
            }
        }
    }

    /// Exact stationary covariance: solves P = T P T' + R R' by direct
    /// elimination on the vectorized system.
    fn stationary_covariance(&self) -> Result<Vec<f64>> {
        let r = self.r;
        let n = r * r;
        // T in dense form for the Kronecker product.
        let mut t = vec![0.0f64; n];
        for i in 0..r {
            t[i * r] = self.phi[i];
            if i + 1 < r {
                t[i * r + i + 1] = 1.0;
            }
        }
        let mut a = vec![0.0f64; n * n];
        let mut b = vec![0.0f64; n];
        for i in 0..r {
            for j in 0..r {
                let row = i * r + j;
                b[row] = self.rvec[i] * self.rvec[j];
                for k in 0..r {
                    for l in 0..r {
                        let col = k * r + l;
                        let kron = t[i * r + k] * t[j * r + l];
                        a[row * n + col] = if row == col { 1.0 - kron } else { -kron };
                    }
                }
            }
        }
        solve_dense(&mut a, &mut b, n).ok_or_else(|| Error::UnstableCoefficients(f64::NAN))?;
        Ok(b)
    }
}

/// Gaussian elimination with partial pivoting; solves in place, answer in b.
pub(crate) fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let mut piv = col;
        let mut max = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > max {
                max = v;
                piv = row;
            }
        }
        if max < 1e-13 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Some(())
}

/// Runs the unit-variance filter and accumulates the prediction-error sums.
/// Root conditions are assumed; callers outside the optimizer hot path
/// should prefer [`kalman_loglik`].
pub fn filter_sums(series: &[f64], phi: &[f64], theta: &[f64]) -> Result<FilterSums> {
    let ss = StateSpace::new(phi, theta);
    let r = ss.r;
    let mut p = ss.stationary_covariance()?;
    let mut a = vec![0.0f64; r];
    let mut sum_ln_f = 0.0;
    let mut sum_v2 = 0.0;

    let mut a_filt = vec![0.0f64; r];
    let mut p_filt = vec![0.0f64; r * r];
    let mut tmp = vec![0.0f64; r * r];

    for (step, &x) in series.iter().enumerate() {
        let f = p[0];
        if !f.is_finite() || f <= F_MIN {
            return Err(Error::FilterNotPositiveDefinite { step, variance: f });
        }
        let v = x - a[0];
        sum_ln_f += f.ln();
        sum_v2 += v * v / f;

        // Update with K = P[:,0]: a_f = a + K v / F, P_f = P - K K' / F.
        for i in 0..r {
            a_filt[i] = a[i] + p[i * r] * v / f;
        }
        for i in 0..r {
            for j in 0..r {
                p_filt[i * r + j] = p[i * r + j] - p[i * r] * p[j * r] / f;
            }
        }
        // Predict: a = T a_f, P = T P_f T' + R R'.
        for i in 0..r {
            let shifted = if i + 1 < r { a_filt[i + 1] } else { 0.0 };
            a[i] = ss.phi[i] * a_filt[0] + shifted;
        }
        ss.companion_left(&p_filt, &mut tmp);
        ss.companion_right(&tmp, &mut p);
        for i in 0..r {
            for j in 0..r {
                p[i * r + j] += ss.rvec[i] * ss.rvec[j];
            }
        }
        // Keep P symmetric against drift.
        for i in 0..r {
            for j in i + 1..r {
                let s = 0.5 * (p[i * r + j] + p[j * r + i]);
                p[i * r + j] = s;
                p[j * r + i] = s;
            }
        }
    }
    Ok(FilterSums {
        sum_ln_f,
        sum_v2_over_f: sum_v2,
        n: series.len(),
    })
}

/// Exact zero-mean Gaussian log-likelihood at the given innovation variance.
pub fn kalman_loglik(series: &[f64], phi: &[f64], theta: &[f64], sigma2: f64) -> Result<f64> {
    if sigma2 <= 0.0 {
        return Err(Error::InvalidArgument("sigma2 must be positive".into()));
    }
    for (coeffs, role) in [(phi, PolyRole::Ar), (theta, PolyRole::Ma)] {
        if !coeffs.is_empty() {
            let m = poly_min_root_modulus(coeffs, role)?;
            if m <= 1.0 + ROOT_MARGIN {
                return Err(Error::UnstableCoefficients(m));
            }
        }
    }
    let sums = filter_sums(series, phi, theta)?;
    Ok(loglik_at(&sums, sigma2))
}

/// Log-likelihood at a given sigma2 from unit-variance filter sums.
pub fn loglik_at(sums: &FilterSums, sigma2: f64) -> f64 {
    let n = sums.n as f64;
    -0.5 * n * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * (n * sigma2.ln() + sums.sum_ln_f)
        - 0.5 * sums.sum_v2_over_f / sigma2
}

/// Concentrated log-likelihood: sigma2 maximized out in closed form.
/// Returns (loglik, sigma2_hat).
pub fn concentrated_loglik(sums: &FilterSums) -> (f64, f64) {
    let n = sums.n as f64;
    let sigma2_hat = sums.sum_v2_over_f / n;
    let ll = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + 1.0 + sigma2_hat.ln())
        - 0.5 * sums.sum_ln_f;
    (ll, sigma2_hat)
}
