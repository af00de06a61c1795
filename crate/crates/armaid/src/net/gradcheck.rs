//! Finite-difference verification of the backward pass.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::batch::SeriesBatch;
use super::loss::softmax_cross_entropy;
use super::model::{Mode, Network, NetworkConfig};
use crate::error::Result;
use crate::rng::Stream;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
}

/// Mean cross-entropy of a training-mode forward that leaves running
/// statistics untouched, so repeated evaluations are a pure function of the
/// parameters.
pub fn training_loss(net: &mut Network, x: &SeriesBatch, labels: &[usize]) -> Result<f64> {
    let classes = net.config().num_classes;
    let (logits, _) = net.forward(
        x,
        Mode::Train {
            update_running: false,
        },
    )?;
    let (loss, _) = softmax_cross_entropy(&logits, x.batch(), classes, labels)?;
    Ok(loss)
}

/// Compares an analytic flat gradient against central finite differences at
/// the given coordinates; returns the maximum relative error.
pub fn compare_against_fd(
    net: &mut Network,
    x: &SeriesBatch,
    labels: &[usize],
    analytic: &[f64],
    coords: &[usize],
) -> Result<f64> {
    let base = net.flatten_params();
    let mut worst = 0.0f64;
    for &idx in coords {
        let mut plus = base.clone();
        plus[idx] += FD_STEP;
        net.set_params(&plus)?;
        let up = training_loss(net, x, labels)?;
        let mut minus = base.clone();
        minus[idx] -= FD_STEP;
        net.set_params(&minus)?;
        let down = training_loss(net, x, labels)?;
        let fd = (up - down) / (2.0 * FD_STEP);
        let a = analytic[idx];
        let rel = (fd - a).abs() / fd.abs().max(a.abs()).max(1e-4);
        worst = worst.max(rel);
    }
    net.set_params(&base)?;
    Ok(worst)
}

/// End-to-end gradient check on a freshly initialized network and a random
/// batch: analytic reverse-mode gradients against central differences over
/// at least `coords` sampled coordinates.
pub fn grad_check(
    cfg: NetworkConfig,
    batch: usize,
    coords: usize,
    stream: &Stream,
) -> Result<GradCheckReport> {
    let mut net = Network::init(cfg, &stream.child("net", &[]))?;
    let mut rng = stream.child("data", &[]).rng();
    let mut x = SeriesBatch::zeros(batch, 1, cfg.input_length);
    for v in x.data_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = z;
    }
    let labels: Vec<usize> = (0..batch)
        .map(|_| rng.random_range(0..cfg.num_classes))
        .collect();

    let (logits, cache) = net.forward(
        &x,
        Mode::Train {
            update_running: false,
        },
    )?;
    let cache = cache.expect("training cache");
    let (_, dlogits) = softmax_cross_entropy(&logits, batch, cfg.num_classes, &labels)?;
    let analytic = net.backward(&cache, &dlogits)?.flatten();

    let n = analytic.len();
    let picked = coords.min(n);
    let coord_list: Vec<usize> = sample(&mut rng, n, picked).into_iter().collect();
    let max_rel_err = compare_against_fd(&mut net, &x, &labels, &analytic, &coord_list)?;
    Ok(GradCheckReport {
        max_rel_err,
        checked: picked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::model::Variant;

    fn small_cfg(variant: Variant) -> NetworkConfig {
        NetworkConfig::new(variant, 4, 3, 3, 4, 16).unwrap()
    }

    #[test]
    fn healthy_engine_passes_for_all_variants() {
        for (i, variant) in Variant::all().into_iter().enumerate() {
            let report =
                grad_check(small_cfg(variant), 3, 120, &Stream::root(40 + i as u64)).unwrap();
            assert!(
                report.max_rel_err < 1e-5,
                "{variant:?}: {}",
                report.max_rel_err
            );
        }
    }

    #[test]
    fn repeated_seeds_stay_healthy() {
        for seed in [100u64, 101, 102] {
            let report = grad_check(
                small_cfg(Variant::ReluBeforeAddition),
                3,
                60,
                &Stream::root(seed),
            )
            .unwrap();
            assert!(
                report.max_rel_err < 1e-5,
                "seed {seed}: {}",
                report.max_rel_err
            );
        }
    }

    #[test]
    fn sign_flipped_gradients_are_caught() {
        let cfg = small_cfg(Variant::Original);
        let stream = Stream::root(55);
        let mut net = Network::init(cfg, &stream.child("net", &[])).unwrap();
        let mut rng = stream.child("data", &[]).rng();
        let mut x = SeriesBatch::zeros(3, 1, cfg.input_length);
        for v in x.data_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = z;
        }
        let labels: Vec<usize> = (0..3)
            .map(|_| rng.random_range(0..cfg.num_classes))
            .collect();
        let (logits, cache) = net
            .forward(
                &x,
                Mode::Train {
                    update_running: false,
                },
            )
            .unwrap();
        let (_, dlogits) = softmax_cross_entropy(&logits, 3, cfg.num_classes, &labels).unwrap();
        let mut grads = net.backward(&cache.unwrap(), &dlogits).unwrap();
        for layer in grads.layers.iter_mut() {
            for w in layer.w.iter_mut() {
                *w = -*w;
            }
        }
        let corrupted = grads.flatten();
        // Check only convolution-weight coordinates of the first layer.
        let coords: Vec<usize> = (0..net.layers()[0].conv.w.len()).collect();
        let err = compare_against_fd(&mut net, &x, &labels, &corrupted, &coords).unwrap();
        assert!(err > 1e-1, "corruption went unnoticed: {err}");
    }
}
