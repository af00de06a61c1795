//! Activations, pooling and the classification loss.

use super::batch::SeriesBatch;
use crate::error::{Error, Result};

/// Elementwise max(0, x).
pub fn relu(x: &SeriesBatch) -> SeriesBatch {
    let mut y = x.clone();
    for v in y.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    y
}

/// Backward through ReLU given the saved *output*: the subgradient at 0 is 0,
/// so masking on `output > 0` is exact.
pub fn relu_backward(output: &SeriesBatch, dy: &SeriesBatch) -> SeriesBatch {
    let mut dx = dy.clone();
    for (d, &o) in dx.data_mut().iter_mut().zip(output.data()) {
        if o <= 0.0 {
            *d = 0.0;
        }
    }
    dx
}

/// Mean over time per (sample, channel): maps `B x C x L` to `B x C` logits.
pub fn global_avg_pool(x: &SeriesBatch) -> Vec<f64> {
    let (batch, channels, len) = (x.batch(), x.channels(), x.len());
    let mut out = vec![0.0f64; batch * channels];
    for b in 0..batch {
        for c in 0..channels {
            out[b * channels + c] = x.row(b, c).iter().sum::<f64>() / len as f64;
        }
    }
    out
}

/// Backward of the mean pool: spreads each logit gradient uniformly in time.
pub fn global_avg_pool_backward(
    dlogits: &[f64],
    batch: usize,
    channels: usize,
    len: usize,
) -> SeriesBatch {
    let mut dx = SeriesBatch::zeros(batch, channels, len);
    for b in 0..batch {
        for c in 0..channels {
            let g = dlogits[b * channels + c] / len as f64;
            dx.row_mut(b, c).fill(g);
        }
    }
    dx
}

/// Row-wise softmax of `B x C` logits.
pub fn softmax_rows(logits: &[f64], batch: usize, classes: usize) -> Vec<f64> {
    let mut probs = vec![0.0f64; logits.len()];
    for b in 0..batch {
        let row = &logits[b * classes..(b + 1) * classes];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        let out = &mut probs[b * classes..(b + 1) * classes];
        for (o, &l) in out.iter_mut().zip(row) {
            *o = (l - max).exp();
            denom += *o;
        }
        for o in out.iter_mut() {
            *o /= denom;
        }
    }
    probs
}

/// Mean cross-entropy over the batch plus its gradient w.r.t. the logits
/// (`(softmax - onehot) / B`), computed through a stabilized log-sum-exp.
pub fn softmax_cross_entropy(
    logits: &[f64],
    batch: usize,
    classes: usize,
    labels: &[usize],
) -> Result<(f64, Vec<f64>)> {
    debug_assert_eq!(logits.len(), batch * classes);
    if labels.len() != batch {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for batch of {batch}",
            labels.len()
        )));
    }
    for &l in labels {
        if l >= classes {
            return Err(Error::LabelOutOfRange { label: l, classes });
        }
    }
    let mut loss = 0.0;
    let mut dlogits = softmax_rows(logits, batch, classes);
    for (b, &label) in labels.iter().enumerate() {
        let row = &logits[b * classes..(b + 1) * classes];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
        loss += lse - row[label];
        dlogits[b * classes + label] -= 1.0;
    }
    let scale = 1.0 / batch as f64;
    for d in dlogits.iter_mut() {
        *d *= scale;
    }
    Ok((loss * scale, dlogits))
}
