//! Order prediction and the two classifier assemblies.
//!
//! `Separate` feeds a series to independent AR and MA classifiers. `Joint`
//! first reads the AR order, then picks the MA classifier from an ensemble
//! indexed by that prediction (the members come from the fixed-constraint
//! phase of progressive retraining; a ranged-phase ensemble can be plugged
//! in instead).

use crate::arma::{standardize, TimeSeries};
use crate::error::{Error, Result};
use crate::net::{softmax_rows, SeriesBatch};
use crate::train::{Checkpoint, OrderKind};

/// Argmax with ties broken toward the smaller order.
fn argmax_smallest(probs: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in probs.iter().enumerate() {
        if v > probs[best] {
            best = i;
        }
    }
    best
}

/// Predicts the order a single checkpoint reads off a series: standardizes
/// the input, runs an inference pass, and returns the argmax with the full
/// probability vector.
pub fn predict_order(ckpt: &Checkpoint, series: &TimeSeries) -> Result<(usize, Vec<f64>)> {
    let mut out = predict_orders(ckpt, &[series])?;
    Ok(out.pop().expect("one prediction per series"))
}

/// Batched version of [`predict_order`]; one network pass for the group.
pub fn predict_orders(ckpt: &Checkpoint, series: &[&TimeSeries]) -> Result<Vec<(usize, Vec<f64>)>> {
    let cfg = ckpt.config();
    let standardized: Vec<TimeSeries> = series
        .iter()
        .map(|s| standardize(s))
        .collect::<Result<_>>()?;
    let refs: Vec<&TimeSeries> = standardized.iter().collect();
    let x = SeriesBatch::from_series(&refs, cfg.input_length)?;
    let logits = ckpt.network.infer(&x)?;
    let probs = softmax_rows(&logits, series.len(), cfg.num_classes);
    Ok((0..series.len())
        .map(|b| {
            let row = probs[b * cfg.num_classes..(b + 1) * cfg.num_classes].to_vec();
            (argmax_smallest(&row), row)
        })
        .collect())
}

/// A combined (p, q) prediction with the assembly's confidence score
/// (product of the two winning class probabilities).
#[derive(Clone, Debug, PartialEq)]
pub struct OrderPrediction {
    pub p: usize,
    pub q: usize,
    pub score: f64,
}

/// The two assembly configurations.
pub enum Identifier {
    Separate {
        ar: Checkpoint,
        ma: Checkpoint,
    },
    Joint {
        ar: Checkpoint,
        ensemble: Vec<Checkpoint>,
    },
}

impl Identifier {
    pub fn separate(ar: Checkpoint, ma: Checkpoint) -> Result<Self> {
        check_target(&ar, OrderKind::Ar)?;
        check_target(&ma, OrderKind::Ma)?;
        check_compatible(&ar, &ma)?;
        Ok(Identifier::Separate { ar, ma })
    }

    /// The ensemble must hold one MA checkpoint per AR class, indexed by the
    /// predicted AR order.
    pub fn joint(ar: Checkpoint, ensemble: Vec<Checkpoint>) -> Result<Self> {
        check_target(&ar, OrderKind::Ar)?;
        if ensemble.len() != ar.config().num_classes {
            return Err(Error::IncompatibleCheckpoints(format!(
                "ensemble has {} members for {} classes",
                ensemble.len(),
                ar.config().num_classes
            )));
        }
        for m in &ensemble {
            check_target(m, OrderKind::Ma)?;
            check_compatible(&ar, m)?;
        }
        Ok(Identifier::Joint { ar, ensemble })
    }

    pub fn name(&self) -> String {
        match self {
            Identifier::Separate { ar, .. } => format!("cnn-{}-separate", ar.noise.tag()),
            Identifier::Joint { ar, .. } => format!("cnn-{}-joint", ar.noise.tag()),
        }
    }

    pub fn ar_checkpoint(&self) -> &Checkpoint {
        match self {
            Identifier::Separate { ar, .. } | Identifier::Joint { ar, .. } => ar,
        }
    }

    /// Identifies one series.
    pub fn identify(&self, series: &TimeSeries) -> Result<OrderPrediction> {
        let mut out = self.identify_many(&[series])?;
        Ok(out.pop().expect("one prediction per series"))
    }

    /// Identifies a group of series with batched network passes. For the
    /// joint assembly the group is partitioned by predicted AR order and
    /// each partition is evaluated by its ensemble member.
    pub fn identify_many(&self, series: &[&TimeSeries]) -> Result<Vec<OrderPrediction>> {
        match self {
            Identifier::Separate { ar, ma } => {
                let ar_preds = predict_orders(ar, series)?;
                let ma_preds = predict_orders(ma, series)?;
                Ok(ar_preds
                    .into_iter()
                    .zip(ma_preds)
                    .map(|((p, pp), (q, qp))| OrderPrediction {
                        p,
                        q,
                        score: pp[p] * qp[q],
                    })
                    .collect())
            }
            Identifier::Joint { ar, ensemble } => {
                let ar_preds = predict_orders(ar, series)?;
                let mut groups: Vec<Vec<usize>> = vec![Vec::new(); ensemble.len()];
                for (idx, (p, _)) in ar_preds.iter().enumerate() {
                    groups[*p].push(idx);
                }
                let mut out: Vec<Option<OrderPrediction>> = vec![None; series.len()];
                for (k, group) in groups.iter().enumerate() {
                    if group.is_empty() {
                        continue;
                    }
                    let subset: Vec<&TimeSeries> = group.iter().map(|&i| series[i]).collect();
                    let ma_preds = predict_orders(&ensemble[k], &subset)?;
                    for (&idx, (q, qp)) in group.iter().zip(ma_preds) {
                        let (p, pp) = &ar_preds[idx];
                        out[idx] = Some(OrderPrediction {
                            p: *p,
                            q,
                            score: pp[*p] * qp[q],
                        });
                    }
                }
                Ok(out
                    .into_iter()
                    .map(|o| o.expect("every series grouped"))
                    .collect())
            }
        }
    }
}

fn check_target(ckpt: &Checkpoint, expected: OrderKind) -> Result<()> {
    if ckpt.target != expected {
        return Err(Error::IncompatibleCheckpoints(format!(
            "expected a {} checkpoint, got {}",
            expected.tag(),
            ckpt.target.tag()
        )));
    }
    Ok(())
}

fn check_compatible(a: &Checkpoint, b: &Checkpoint) -> Result<()> {
    let (ca, cb) = (a.config(), b.config());
    if ca.num_classes != cb.num_classes || ca.input_length != cb.input_length {
        return Err(Error::IncompatibleCheckpoints(format!(
            "classes/length ({}, {}) vs ({}, {})",
            ca.num_classes, ca.input_length, cb.num_classes, cb.input_length
        )));
    }
    Ok(())
}
