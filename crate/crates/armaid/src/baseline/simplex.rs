//! Derivative-free minimization by the Nelder-Mead simplex method.

/// Reflection / expansion / contraction / shrink coefficients.
const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. Convergence is declared when the simplex
/// diameter (infinity norm around the best vertex) falls below `tol`;
/// otherwise the search stops at `max_evals` evaluations. Non-finite
/// objective values are treated as +inf.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    tol: f64,
    max_evals: usize,
) -> SimplexResult {
    let dim = x0.len();
    assert!(
        dim > 0,
        "use a direct evaluation for zero-dimensional problems"
    );
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-8 {
            step * v[i].abs().max(1.0)
        } else {
            step
        };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let mut converged = false;
    while evals < max_evals {
        // Order vertices by value.
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let diameter = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if diameter < tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0f64; dim];
        for &idx in order.iter().take(dim) {
            for (c, v) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[worst])
            .map(|(c, w)| c + ALPHA * (c - w))
            .collect();
        let f_reflect = eval(&reflect, &mut evals);

        if f_reflect < values[best] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&reflect)
                .map(|(c, r)| c + GAMMA * (r - c))
                .collect();
            let f_expand = eval(&expand, &mut evals);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
            continue;
        }

        let contract: Vec<f64> = if f_reflect < values[worst] {
            centroid
                .iter()
                .zip(&reflect)
                .map(|(c, r)| c + RHO * (r - c))
                .collect()
        } else {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + RHO * (w - c))
                .collect()
        };
        let f_contract = eval(&contract, &mut evals);
        if f_contract < values[worst].min(f_reflect) {
            simplex[worst] = contract;
            values[worst] = f_contract;
            continue;
        }

        // Shrink toward the best vertex.
        let best_point = simplex[best].clone();
        for idx in 0..=dim {
            if idx == best {
                continue;
            }
            for (v, b) in simplex[idx].iter_mut().zip(&best_point) {
                *v = b + SIGMA * (*v - b);
            }
            values[idx] = eval(&simplex[idx].clone(), &mut evals);
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    SimplexResult {
        x: simplex[best].clone(),
        value: values[best],
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_shifted_quadratic() {
        let res = nelder_mead(
            |x| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2),
            &[0.0, 0.0],
            0.5,
            1e-10,
            2000,
        );
        assert!(res.converged);
        assert!((res.x[0] - 3.0).abs() < 1e-6);
        assert!((res.x[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn handles_rosenbrock_within_budget() {
        let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let res = nelder_mead(rosen, &[-1.2, 1.0], 0.5, 1e-9, 5000);
        assert!(res.value < 1e-6, "value {}", res.value);
    }

    #[test]
    fn infinite_values_do_not_poison_the_search() {
        // Objective is +inf on the left half-plane.
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let res = nelder_mead(f, &[2.0], 0.5, 1e-10, 500);
        assert!((res.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn reports_unconverged_on_tiny_budget() {
        let res = nelder_mead(|x| x[0].powi(2), &[5.0], 0.5, 1e-12, 4);
        assert!(!res.converged);
    }
}
