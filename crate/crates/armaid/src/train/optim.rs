//! Gradient-descent optimizers over flat parameter vectors.

use crate::error::{Error, Result};

/// Optimizer family and hyper-parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    /// Nesterov accelerated gradient with the given momentum.
    Nag { momentum: f64 },
    /// Adam with bias correction.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    /// Momentum 0.75, the better-performing of the two tested values.
    pub fn default_nag() -> Self {
        OptimizerKind::Nag { momentum: 0.75 }
    }

    pub fn default_adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            OptimizerKind::Nag { momentum } => format!("nag:{momentum}"),
            OptimizerKind::Adam { beta1, beta2, eps } => format!("adam:{beta1}:{beta2}:{eps}"),
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        let parts: Vec<&str> = tag.split(':').collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad optimizer tag `{tag}`")))
        };
        match parts.as_slice() {
            ["nag", m] => Ok(OptimizerKind::Nag {
                momentum: parse(m)?,
            }),
            ["adam", b1, b2, e] => Ok(OptimizerKind::Adam {
                beta1: parse(b1)?,
                beta2: parse(b2)?,
                eps: parse(e)?,
            }),
            _ => Err(Error::InvalidArgument(format!("bad optimizer tag `{tag}`"))),
        }
    }
}

/// Mutable optimizer state sized to one parameter vector.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    /// NAG velocity, or Adam first moment.
    m: Vec<f64>,
    /// Adam second moment (unused for NAG).
    v: Vec<f64>,
    /// Adam step counter.
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, n_params: usize) -> Self {
        let v = match kind {
            OptimizerKind::Adam { .. } => vec![0.0; n_params],
            OptimizerKind::Nag { .. } => Vec::new(),
        };
        Optimizer {
            kind,
            m: vec![0.0; n_params],
            v,
            t: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Velocity buffer (NAG) / first-moment buffer (Adam).
    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    /// Applies one update in place. Rejects non-finite gradients without
    /// touching parameters or state.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "optimizer buffers {} vs params {} vs grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        match self.kind {
            OptimizerKind::Nag { momentum } => {
                // Lookahead reformulation: the stored parameters are the
                // point where gradients are evaluated, so
                //   v' = mu*v - lr*g
                //   theta' = theta - mu*v + (1+mu)*v'
                for ((p, g), v) in params.iter_mut().zip(grads).zip(self.m.iter_mut()) {
                    let v_new = momentum * *v - lr * g;
                    *p += -momentum * *v + (1.0 + momentum) * v_new;
                    *v = v_new;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                self.t += 1;
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn nag_with_zero_momentum_is_plain_sgd() {
        let mut opt = Optimizer::new(OptimizerKind::Nag { momentum: 0.0 }, 3);
        let mut params = vec![1.0, -2.0, 0.5];
        let grads = vec![0.3, -0.1, 2.0];
        opt.step(&mut params, &grads, 0.1).unwrap();
        assert_abs_diff_eq!(params[0], 1.0 - 0.1 * 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(params[1], -2.0 + 0.1 * 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(params[2], 0.5 - 0.1 * 2.0, epsilon = 1e-15);
    }

    #[test]
    fn nag_velocity_converges_to_geometric_limit() {
        // Constant gradient g: fixed point v = -lr*g/(1-mu) = -4*lr*g.
        let mut opt = Optimizer::new(OptimizerKind::Nag { momentum: 0.75 }, 1);
        let mut params = vec![0.0];
        let grads = vec![1.0];
        let lr = 0.01;
        for _ in 0..200 {
            opt.step(&mut params, &grads, lr).unwrap();
        }
        assert_abs_diff_eq!(opt.first_moment()[0], -4.0 * lr, epsilon = 1e-10);
    }

    #[test]
    fn nag_descends_a_quadratic_bowl() {
        // f = theta^2/2, grad = theta.
        let mut opt = Optimizer::new(OptimizerKind::Nag { momentum: 0.75 }, 1);
        let mut params = vec![3.0];
        for _ in 0..100 {
            let g = vec![params[0]];
            opt.step(&mut params, &g, 0.1).unwrap();
        }
        assert!(
            params[0].abs() < 3.0 * 0.1,
            "theta did not shrink: {}",
            params[0]
        );
    }

    #[test]
    fn adam_first_step_moves_by_about_lr() {
        let mut opt = Optimizer::new(OptimizerKind::default_adam(), 2);
        let mut params = vec![0.0, 0.0];
        opt.step(&mut params, &[0.3, -400.0], 0.05).unwrap();
        for (p, g) in params.iter().zip([0.3f64, -400.0]) {
            assert_abs_diff_eq!(*p, -0.05 * g.signum(), epsilon = 1e-5);
        }
    }

    #[test]
    fn adam_ignores_zero_gradients() {
        let mut opt = Optimizer::new(OptimizerKind::default_adam(), 2);
        let mut params = vec![1.5, -0.5];
        for _ in 0..50 {
            opt.step(&mut params, &[0.0, 0.0], 0.1).unwrap();
        }
        assert_eq!(params, vec![1.5, -0.5]);
    }

    #[test]
    fn adam_descends_a_quadratic_bowl_monotonically() {
        let mut opt = Optimizer::new(OptimizerKind::default_adam(), 1);
        let mut params = vec![1.0];
        let mut prev = 0.5 * params[0] * params[0];
        for _ in 0..1000 {
            let g = vec![params[0]];
            opt.step(&mut params, &g, 0.001).unwrap();
            let f = 0.5 * params[0] * params[0];
            assert!(f <= prev + 1e-15, "f rose: {prev} -> {f}");
            prev = f;
        }
        assert!(prev < 0.5);
    }

    #[test]
    fn non_finite_gradient_aborts_step() {
        let mut opt = Optimizer::new(OptimizerKind::default_nag(), 2);
        let mut params = vec![1.0, 2.0];
        let res = opt.step(&mut params, &[f64::NAN, 0.0], 0.1);
        assert!(matches!(res, Err(Error::NonFiniteGradient)));
        assert_eq!(params, vec![1.0, 2.0]);
    }
}
