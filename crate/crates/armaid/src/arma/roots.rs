//! Minimum root modulus of AR/MA lag polynomials.
//!
//! Stationarity and invertibility both reduce to the same question: do all
//! complex roots of the lag polynomial lie strictly outside the unit circle?
//! Roots are located with Aberth-Ehrlich simultaneous iteration on the monic
//! reversed polynomial, which avoids dividing by a possibly tiny leading
//! coefficient and needs no eigenvalue machinery.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which lag polynomial the coefficients parameterize.
///
/// `Ar` reads coefficients as `1 - c_1 z - ... - c_k z^k`,
/// `Ma` as `1 + c_1 z + ... + c_k z^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyRole {
    Ar,
    Ma,
}

const MAX_ITERS: usize = 100;
const TOL: f64 = 1e-12;

/// Minimum modulus over the complex roots of the lag polynomial.
///
/// Returns `+inf` when the polynomial is constant (empty or all-zero
/// coefficients), since it then has no roots at all.
pub fn poly_min_root_modulus(coeffs: &[f64], role: PolyRole) -> Result<f64> {
    let sign = match role {
        PolyRole::Ar => -1.0,
        PolyRole::Ma => 1.0,
    };
    // p(z) = 1 + sign*c_1 z + ... + sign*c_k z^k, trimmed to true degree.
    let mut poly = Vec::with_capacity(coeffs.len() + 1);
    poly.push(1.0);
    poly.extend(coeffs.iter().map(|c| sign * c));
    while poly.last() == Some(&0.0) {
        poly.pop();
    }
    let degree = poly.len() - 1;
    if degree == 0 {
        return Ok(f64::INFINITY);
    }

    // Reversed polynomial q(w) = w^k p(1/w): monic, roots are 1/z.
    let reversed: Vec<f64> = poly.iter().rev().copied().collect();
    let roots = aberth(&reversed)?;
    let max_w = roots.iter().map(|w| w.norm()).fold(0.0, f64::max);
    Ok(1.0 / max_w)
}

/// All complex roots of a monic real polynomial given in ascending order
/// (`q[k] == 1`). Degree must be >= 1 and `q[0] != 0`.
fn aberth(q: &[f64]) -> Result<Vec<Complex64>> {
    let degree = q.len() - 1;
    debug_assert!(degree >= 1 && q[degree] == 1.0 && q[0] != 0.0);

    if degree == 1 {
        return Ok(vec![Complex64::new(-q[0], 0.0)]);
    }

    // dq = q' coefficients, ascending.
    let dq: Vec<f64> = (1..=degree).map(|j| j as f64 * q[j]).collect();

    // Initial guesses on a circle between the Cauchy upper bound and the
    // reciprocal lower bound, angles offset so no guess starts on an axis.
    let max_tail = q[..degree].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let upper = 1.0 + max_tail;
    let max_lead = q[1..].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let lower = q[0].abs() / (q[0].abs() + max_lead);
    let radius = (upper * lower).sqrt();
    let mut w: Vec<Complex64> = (0..degree)
        .map(|j| {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / degree as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    for _ in 0..MAX_ITERS {
        let mut max_step = 0.0f64;
        for j in 0..degree {
            let pj = horner(q, w[j]);
            let dpj = horner(&dq, w[j]);
            // Newton ratio; a vanishing derivative gets the iterate nudged.
            let newton = if dpj.norm() == 0.0 {
                w[j] += Complex64::new(1e-8, 1e-8);
                continue;
            } else {
                pj / dpj
            };
            let mut repulsion = Complex64::new(0.0, 0.0);
            for i in 0..degree {
                if i != j {
                    let diff = w[j] - w[i];
                    if diff.norm() == 0.0 {
                        continue;
                    }
                    repulsion += diff.inv();
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let step = if denom.norm() == 0.0 {
                newton
            } else {
                newton / denom
            };
            w[j] -= step;
            let scaled = step.norm() / (1.0 + w[j].norm());
            max_step = max_step.max(scaled);
        }
        if max_step <= TOL {
            return Ok(w);
        }
    }
    Err(Error::RootsNotConverged {
        max_iters: MAX_ITERS,
    })
}

#[inline]
fn horner(coeffs: &[f64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn ar1_root() {
        // 1 - 0.5 z has root z = 2.
        let m = poly_min_root_modulus(&[0.5], PolyRole::Ar).unwrap();
        assert_abs_diff_eq!(m, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn ma1_root() {
        // 1 + 0.5 z has root z = -2.
        let m = poly_min_root_modulus(&[0.5], PolyRole::Ma).unwrap();
        assert_abs_diff_eq!(m, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn ar2_boundary_root() {
        // 1 - 0.5 z - 0.5 z^2 factors as -(z - 1)(z + 2)/2: roots 1 and -2.
        let m = poly_min_root_modulus(&[0.5, 0.5], PolyRole::Ar).unwrap();
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_and_zero_coeffs_have_no_roots() {
        assert_eq!(
            poly_min_root_modulus(&[], PolyRole::Ar).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            poly_min_root_modulus(&[0.0, 0.0], PolyRole::Ma).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn trailing_zero_reduces_degree() {
        let full = poly_min_root_modulus(&[0.5], PolyRole::Ar).unwrap();
        let padded = poly_min_root_modulus(&[0.5, 0.0, 0.0], PolyRole::Ar).unwrap();
        assert_abs_diff_eq!(full, padded, epsilon = 1e-10);
    }

    #[test]
    fn known_factored_quartic() {
        // (1 - z/2)(1 - z/3)(1 + z/4)(1 + z/5) expanded: min root modulus 2.
        // Coefficients of prod (1 - z/r_i) with r = 2, 3, -4, -5.
        let roots = [2.0f64, 3.0, -4.0, -5.0];
        let mut poly = vec![1.0];
        for r in roots {
            let mut next = vec![0.0; poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c / r;
            }
            poly = next;
        }
        // poly = 1 + c1 z + ... ; feed as MA so the sign convention matches.
        let coeffs: Vec<f64> = poly[1..].to_vec();
        let m = poly_min_root_modulus(&coeffs, PolyRole::Ma).unwrap();
        assert_abs_diff_eq!(m, 2.0, epsilon = 1e-9);
    }

    proptest! {
        // Residuals at the recovered roots must vanish, and the product of
        // the reversed-polynomial roots must equal its constant term (Vieta).
        #[test]
        fn roots_satisfy_polynomial(coeffs in proptest::collection::vec(-2.0f64..2.0, 1..=9)) {
            prop_assume!(coeffs.last().map(|c| c.abs() > 1e-3).unwrap_or(false));
            let mut q: Vec<f64> = std::iter::once(1.0)
                .chain(coeffs.iter().copied())
                .rev()
                .collect();
            let scale = q[q.len() - 1];
            for c in q.iter_mut() {
                *c /= scale;
            }
            let q = {
                let mut v = q;
                let last = v.len() - 1;
                v[last] = 1.0;
                v
            };
            let roots = aberth(&q).unwrap();
            let bound = 1.0 + q.iter().map(|c| c.abs()).fold(0.0, f64::max);
            for w in &roots {
                let residual = horner(&q, *w).norm();
                prop_assert!(residual < 1e-6 * bound.powi(q.len() as i32), "residual {residual}");
            }
            let product: f64 = roots.iter().map(|w| w.norm()).product();
            prop_assert!((product - q[0].abs()).abs() < 1e-6 * (1.0 + q[0].abs()));
        }
    }
}
