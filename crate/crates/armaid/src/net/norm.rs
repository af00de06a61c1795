//! Batch normalization over (batch x time) per channel.

use super::batch::SeriesBatch;
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub channels: usize,
}

/// Saved batch statistics and normalized activations for backprop.
#[derive(Clone, Debug)]
pub struct BnCache {
    pub xhat: SeriesBatch,
    pub inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn identity(channels: usize) -> Self {
        BatchNorm {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            channels,
        }
    }

    /// Training-mode forward using batch statistics.
    ///
    /// Running statistics are folded in with momentum 0.1 unless
    /// `update_running` is off (gradient checking re-evaluates the forward
    /// pass and must leave the layer untouched).
    pub fn forward_train(
        &mut self,
        x: &SeriesBatch,
        update_running: bool,
    ) -> Result<(SeriesBatch, BnCache)> {
        self.check_channels(x)?;
        if x.batch() < 2 {
            return Err(Error::BatchTooSmall(x.batch()));
        }
        let (batch, channels, len) = (x.batch(), x.channels(), x.len());
        let n = (batch * len) as f64;

        let mut mean = vec![0.0f64; channels];
        let mut var = vec![0.0f64; channels];
        for c in 0..channels {
            let mut sum = 0.0;
            for b in 0..batch {
                sum += x.row(b, c).iter().sum::<f64>();
            }
            let m = sum / n;
            let mut ss = 0.0;
            for b in 0..batch {
                ss += x.row(b, c).iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            }
            mean[c] = m;
            var[c] = ss / n;
        }

        let mut xhat = SeriesBatch::zeros(batch, channels, len);
        let mut inv_std = vec![0.0f64; channels];
        for c in 0..channels {
            inv_std[c] = 1.0 / (var[c] + BN_EPS).sqrt();
        }
        let mut y = SeriesBatch::zeros(batch, channels, len);
        for b in 0..batch {
            for c in 0..channels {
                let (m, is, g, bt) = (mean[c], inv_std[c], self.gamma[c], self.beta[c]);
                let src = x.row(b, c);
                let xh = xhat.row_mut(b, c);
                for (h, &v) in xh.iter_mut().zip(src) {
                    *h = (v - m) * is;
                }
                let yrow = y.row_mut(b, c);
                for (o, &h) in yrow.iter_mut().zip(xhat.row(b, c)) {
                    *o = g * h + bt;
                }
            }
        }

        if update_running {
            for c in 0..channels {
                self.running_mean[c] =
                    (1.0 - BN_MOMENTUM) * self.running_mean[c] + BN_MOMENTUM * mean[c];
                self.running_var[c] =
                    (1.0 - BN_MOMENTUM) * self.running_var[c] + BN_MOMENTUM * var[c];
            }
        }

        Ok((y, BnCache { xhat, inv_std }))
    }

    /// Inference-mode forward using running statistics only.
    pub fn forward_infer(&self, x: &SeriesBatch) -> Result<SeriesBatch> {
        self.check_channels(x)?;
        let (batch, channels, len) = (x.batch(), x.channels(), x.len());
        let mut y = SeriesBatch::zeros(batch, channels, len);
        for b in 0..batch {
            for c in 0..channels {
                let is = 1.0 / (self.running_var[c] + BN_EPS).sqrt();
                let (m, g, bt) = (self.running_mean[c], self.gamma[c], self.beta[c]);
                let src = x.row(b, c);
                let dst = y.row_mut(b, c);
                for (d, &v) in dst.iter_mut().zip(src) {
                    *d = g * (v - m) * is + bt;
                }
            }
        }
        Ok(y)
    }

    /// Backward pass through the batch statistics.
    pub fn backward(&self, cache: &BnCache, dy: &SeriesBatch) -> (SeriesBatch, Vec<f64>, Vec<f64>) {
        let (batch, channels, len) = (dy.batch(), dy.channels(), dy.len());
        let n = (batch * len) as f64;
        let mut dgamma = vec![0.0f64; channels];
        let mut dbeta = vec![0.0f64; channels];
        for c in 0..channels {
            let mut dg = 0.0;
            let mut db = 0.0;
            for b in 0..batch {
                let dyr = dy.row(b, c);
                let xhr = cache.xhat.row(b, c);
                for (dv, hv) in dyr.iter().zip(xhr) {
                    dg += dv * hv;
                    db += dv;
                }
            }
            dgamma[c] = dg;
            dbeta[c] = db;
        }
        let mut dx = SeriesBatch::zeros(batch, channels, len);
        for b in 0..batch {
            for c in 0..channels {
                let scale = self.gamma[c] * cache.inv_std[c] / n;
                let (dg, db) = (dgamma[c], dbeta[c]);
                let dyr = dy.row(b, c);
                let xhr = cache.xhat.row(b, c);
                let dxr = dx.row_mut(b, c);
                for ((o, &d), &h) in dxr.iter_mut().zip(dyr).zip(xhr) {
                    *o = scale * (n * d - db - h * dg);
                }
            }
        }
        (dx, dgamma, dbeta)
    }

    fn check_channels(&self, x: &SeriesBatch) -> Result<()> {
        if x.channels() != self.channels {
            return Err(Error::ShapeMismatch(format!(
                "batch norm over {} channels got {}",
                self.channels,
                x.channels()
            )));
        }
        Ok(())
    }
}
