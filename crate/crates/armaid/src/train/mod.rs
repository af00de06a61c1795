//! Training loops on freshly simulated batches, plus progressive retraining
//! under opposite-order constraints.

pub mod optim;
pub mod schedule;

use std::time::Instant;

use crate::arma::{make_training_batch, LabeledBatch, NoiseKind};
use crate::error::{Error, Result};
use crate::net::{softmax_cross_entropy, Mode, Network, NetworkConfig, SeriesBatch};
use crate::rng::Stream;
pub use optim::{Optimizer, OptimizerKind};
pub use schedule::{Action, Schedule};

/// Which order a classifier is trained to read off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderKind {
    Ar,
    Ma,
}

impl OrderKind {
    pub fn tag(self) -> &'static str {
        match self {
            OrderKind::Ar => "ar",
            OrderKind::Ma => "ma",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "ar" => Ok(OrderKind::Ar),
            "ma" => Ok(OrderKind::Ma),
            other => Err(Error::InvalidArgument(format!("unknown target `{other}`"))),
        }
    }
}

/// An inclusive range of opposite-order values used during a training phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub lo: usize,
    pub hi: usize,
}

impl Constraint {
    pub fn fixed(k: usize) -> Self {
        Constraint { lo: k, hi: k }
    }

    pub fn range(hi: usize) -> Self {
        Constraint { lo: 0, hi }
    }

    pub fn values(&self) -> Vec<usize> {
        (self.lo..=self.hi).collect()
    }

    pub fn encode(&self) -> String {
        if self.lo == self.hi {
            format!("{}", self.lo)
        } else {
            format!("{}-{}", self.lo, self.hi)
        }
    }

    pub fn decode(text: &str) -> Result<Self> {
        let bad = || Error::HeaderParse(format!("constraint `{text}`"));
        if let Some((lo, hi)) = text.split_once('-') {
            Ok(Constraint {
                lo: lo.parse().map_err(|_| bad())?,
                hi: hi.parse().map_err(|_| bad())?,
            })
        } else {
            let k: usize = text.parse().map_err(|_| bad())?;
            Ok(Constraint::fixed(k))
        }
    }
}

/// Per-window training statistics.
#[derive(Clone, Debug, Default)]
pub struct TrainTrace {
    pub window_means: Vec<f64>,
    pub window_lrs: Vec<f64>,
    pub window_wall: Vec<f64>,
    pub total_batches: usize,
    pub wall_seconds: f64,
    pub final_mean_error: f64,
}

/// A trained classifier with its provenance.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub network: Network,
    pub target: OrderKind,
    pub noise: NoiseKind,
    pub optimizer: OptimizerKind,
    pub constraint_history: Vec<Constraint>,
    pub trace: TrainTrace,
    pub seed: u64,
}

impl Checkpoint {
    /// Mean error of the last completed window; the figure of merit used
    /// when retraining rounds compete.
    pub fn mean_error(&self) -> f64 {
        self.trace.final_mean_error
    }

    pub fn config(&self) -> &NetworkConfig {
        self.network.config()
    }
}

/// Knobs for one training run.
#[derive(Clone, Debug)]
pub struct TrainOptions {
    pub opposite_range: Vec<usize>,
    pub noise: NoiseKind,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub initial_lr: f64,
    pub series_len: usize,
    /// Batches per schedule window; 100 matches the reference procedure,
    /// smaller values keep test runs short.
    pub window_batches: usize,
    /// Zeroes recorded wall times so checkpoint files are byte-reproducible
    /// run to run.
    pub deterministic: bool,
    /// Floor on series per generated batch. Order grids smaller than this
    /// are drawn multiple times (fresh coefficients each) and concatenated:
    /// with only a handful of series, batch-norm statistics carry enough
    /// batch-composition information for the classifier to learn relative
    /// rather than absolute features, which collapses at inference time.
    /// Grids at or above the floor (the standard 100-series batch) are
    /// generated exactly once.
    pub min_batch_series: usize,
}

impl TrainOptions {
    pub fn new(noise: NoiseKind, optimizer: OptimizerKind, seed: u64, series_len: usize) -> Self {
        TrainOptions {
            opposite_range: (0..=9).collect(),
            noise,
            optimizer,
            seed,
            initial_lr: Schedule::DEFAULT_INITIAL_LR,
            series_len,
            window_batches: Schedule::WINDOW_BATCHES,
            deterministic: false,
            min_batch_series: 16,
        }
    }
}

const DIVERGENCE_THRESHOLD: f64 = 23.025850929940457; // 10 ln 10

/// Trains a freshly initialized network until the schedule stops.
pub fn train(cfg: NetworkConfig, target: OrderKind, opts: &TrainOptions) -> Result<Checkpoint> {
    let stream = Stream::root(opts.seed);
    let network = Network::init(cfg, &stream.child("init", &[]))?;
    let (network, trace) = run_training(network, target, opts, &stream)?;
    Ok(Checkpoint {
        network,
        target,
        noise: opts.noise,
        optimizer: opts.optimizer,
        constraint_history: vec![constraint_of(&opts.opposite_range)],
        trace,
        seed: opts.seed,
    })
}

/// Continues training an existing network (used by retraining rounds).
pub fn train_from(
    network: Network,
    target: OrderKind,
    opts: &TrainOptions,
) -> Result<(Network, TrainTrace)> {
    let stream = Stream::root(opts.seed);
    run_training(network, target, opts, &stream)
}

fn constraint_of(range: &[usize]) -> Constraint {
    let lo = range.iter().copied().min().unwrap_or(0);
    let hi = range.iter().copied().max().unwrap_or(0);
    Constraint { lo, hi }
}

/// Generates one labeled batch for the target/opposite ranges, drawing the
/// grid several times over when it is smaller than the batch floor.
fn generate_batch(
    target: OrderKind,
    classes: usize,
    opposite: &[usize],
    noise: NoiseKind,
    len: usize,
    min_series: usize,
    stream: &Stream,
) -> Result<LabeledBatch> {
    let target_range: Vec<usize> = (0..classes).collect();
    let combos = target_range.len() * opposite.len();
    let mut copies = min_series.div_ceil(combos).max(1);
    // An even copy count keeps the two mini-batches class-balanced.
    if copies > 1 && copies % 2 == 1 {
        copies += 1;
    }
    let mut series = Vec::with_capacity(combos * copies);
    for copy in 0..copies {
        let copy_stream = if copies == 1 {
            *stream
        } else {
            stream.child("copy", &[copy as u64])
        };
        let batch = match target {
            OrderKind::Ar => {
                make_training_batch(&target_range, opposite, noise, len, &copy_stream)?
            }
            OrderKind::Ma => {
                make_training_batch(opposite, &target_range, noise, len, &copy_stream)?
            }
        };
        series.extend(batch.series);
    }
    if copies > 1 {
        use rand::seq::SliceRandom;
        series.shuffle(&mut stream.child("mix", &[]).rng());
    }
    Ok(LabeledBatch { series })
}

fn target_label(target: OrderKind, label: (usize, usize)) -> usize {
    match target {
        OrderKind::Ar => label.0,
        OrderKind::Ma => label.1,
    }
}

fn run_training(
    mut network: Network,
    target: OrderKind,
    opts: &TrainOptions,
    stream: &Stream,
) -> Result<(Network, TrainTrace)> {
    let cfg = *network.config();
    let classes = cfg.num_classes;
    let mut params = network.flatten_params();
    let mut optimizer = Optimizer::new(opts.optimizer, params.len());
    let mut schedule = Schedule::new(opts.initial_lr);
    let mut trace = TrainTrace::default();

    let run_start = Instant::now();
    let mut window_start = Instant::now();
    let mut window_loss = 0.0f64;
    let mut window_iters = 0usize;
    let mut batch_index = 0u64;

    loop {
        let batch_stream = stream.child("batch", &[batch_index]);
        let batch = generate_batch(
            target,
            classes,
            &opts.opposite_range,
            opts.noise,
            opts.series_len,
            opts.min_batch_series,
            &batch_stream,
        )?;
        batch_index += 1;

        // The batch arrives shuffled; split it into two equal mini-batches,
        // each driving one forward/backward/step iteration. Batches too
        // small to split twice run whole.
        let n = batch.len();
        let splits: Vec<&[crate::arma::TimeSeries]> = if n >= 4 {
            let mid = n / 2;
            vec![&batch.series[..mid], &batch.series[mid..]]
        } else {
            vec![&batch.series[..]]
        };

        for part in splits {
            let refs: Vec<&crate::arma::TimeSeries> = part.iter().collect();
            let x = SeriesBatch::from_series(&refs, opts.series_len)?;
            let labels: Vec<usize> = part
                .iter()
                .map(|s| target_label(target, s.label.expect("labeled series")))
                .collect();
            for &l in &labels {
                if l >= classes {
                    return Err(Error::LabelOutOfRange { label: l, classes });
                }
            }
            let (logits, cache) = network.forward(
                &x,
                Mode::Train {
                    update_running: true,
                },
            )?;
            let cache = cache.expect("training cache");
            let (loss, dlogits) = softmax_cross_entropy(&logits, part.len(), classes, &labels)?;
            let grads = network.backward(&cache, &dlogits)?.flatten();
            optimizer.step(&mut params, &grads, schedule.lr())?;
            network.set_params(&params)?;
            window_loss += loss;
            window_iters += 1;
        }
        trace.total_batches += 1;

        if trace.total_batches % opts.window_batches == 0 {
            let mean = window_loss / window_iters as f64;
            trace.window_means.push(mean);
            trace.window_lrs.push(schedule.lr());
            trace.window_wall.push(if opts.deterministic {
                0.0
            } else {
                window_start.elapsed().as_secs_f64()
            });
            window_loss = 0.0;
            window_iters = 0;
            window_start = Instant::now();
            if !mean.is_finite() || mean > DIVERGENCE_THRESHOLD {
                return Err(Error::TrainingDiverged {
                    mean,
                    threshold: DIVERGENCE_THRESHOLD,
                });
            }
            if schedule.update(mean) == Action::Stop {
                break;
            }
        }
    }

    trace.wall_seconds = if opts.deterministic {
        0.0
    } else {
        run_start.elapsed().as_secs_f64()
    };
    trace.final_mean_error = *trace.window_means.last().expect("at least one window");
    Ok((network, trace))
}

/// Forward-only mean cross-entropy over `windows` windows of fresh batches;
/// the network is not updated. Useful for calibrating a freshly initialized
/// classifier against the ln(num_classes) baseline.
pub fn measure_mean_error(
    network: &mut Network,
    target: OrderKind,
    opts: &TrainOptions,
    windows: usize,
) -> Result<f64> {
    let cfg = *network.config();
    let stream = Stream::root(opts.seed).child("measure", &[]);
    let mut total = 0.0;
    let mut count = 0usize;
    for b in 0..(windows * opts.window_batches) as u64 {
        let batch = generate_batch(
            target,
            cfg.num_classes,
            &opts.opposite_range,
            opts.noise,
            opts.series_len,
            opts.min_batch_series,
            &stream.child("batch", &[b]),
        )?;
        let refs: Vec<&crate::arma::TimeSeries> = batch.series.iter().collect();
        let x = SeriesBatch::from_series(&refs, opts.series_len)?;
        let labels: Vec<usize> = batch
            .series
            .iter()
            .map(|s| target_label(target, s.label.expect("labeled series")))
            .collect();
        let (logits, _) = network.forward(
            &x,
            Mode::Train {
                update_running: false,
            },
        )?;
        let (loss, _) = softmax_cross_entropy(&logits, batch.len(), cfg.num_classes, &labels)?;
        total += loss;
        count += 1;
    }
    Ok(total / count as f64)
}

/// Knobs for progressive retraining.
#[derive(Clone, Debug)]
pub struct RetrainOptions {
    pub seed: u64,
    /// Learning rate each retraining round restarts from.
    pub reset_lr: f64,
    /// Consecutive non-improving rounds before moving to the next constraint.
    pub round_patience: usize,
    /// Hard cap on rounds per constraint.
    pub round_cap: usize,
    /// Highest opposite-order value swept (9 for the full procedure).
    pub max_opposite: usize,
    pub window_batches: usize,
}

impl RetrainOptions {
    pub fn new(seed: u64) -> Self {
        RetrainOptions {
            seed,
            reset_lr: 0.5,
            round_patience: 6,
            round_cap: 30,
            max_opposite: 9,
            window_batches: Schedule::WINDOW_BATCHES,
        }
    }
}

/// Result of a progressive retraining sweep.
#[derive(Clone, Debug)]
pub struct RetrainOutcome {
    /// The best checkpoint over the whole sweep (never worse than the input).
    pub final_checkpoint: Checkpoint,
    /// Selected checkpoint at the end of each fixed-constraint step k.
    pub fixed_ensemble: Vec<Checkpoint>,
    /// Selected checkpoint at the end of each ranged step 0..=k, k >= 1.
    pub ranged_ensemble: Vec<Checkpoint>,
}

/// Retrains under progressively wider opposite-order constraints.
///
/// Phase 1 fixes the opposite order at k = 0..=max; phase 2 sweeps ranges
/// 0..=k for k = 1..=max. Each step runs rounds of full training restarting
/// from the reset learning rate; a round's checkpoint is kept only when its
/// mean error beats the best seen so far, and a step ends after
/// `round_patience` consecutive rejections (or the round cap). Acceptance is
/// monotone, so the returned checkpoint is never worse than the input.
pub fn progressive_retrain(input: &Checkpoint, opts: &RetrainOptions) -> Result<RetrainOutcome> {
    let mut best = input.clone();
    let mut fixed_ensemble = Vec::with_capacity(opts.max_opposite + 1);
    let mut ranged_ensemble = Vec::with_capacity(opts.max_opposite);

    let series_len = input.config().input_length;
    for phase in 0..2usize {
        let ks: Vec<usize> = if phase == 0 {
            (0..=opts.max_opposite).collect()
        } else {
            (1..=opts.max_opposite).collect()
        };
        for &k in &ks {
            let constraint = if phase == 0 {
                Constraint::fixed(k)
            } else {
                Constraint::range(k)
            };
            let mut streak = 0usize;
            let mut round = 0usize;
            while streak < opts.round_patience && round < opts.round_cap {
                let round_seed = Stream::root(opts.seed)
                    .child("retrain-round", &[phase as u64, k as u64, round as u64]);
                let mut train_opts = TrainOptions::new(
                    input.noise,
                    input.optimizer,
                    seed_of(&round_seed),
                    series_len,
                );
                train_opts.opposite_range = constraint.values();
                train_opts.initial_lr = opts.reset_lr;
                train_opts.window_batches = opts.window_batches;
                let (network, trace) = train_from(best.network.clone(), input.target, &train_opts)?;
                round += 1;
                if trace.final_mean_error < best.mean_error() {
                    let mut history = best.constraint_history.clone();
                    history.push(constraint);
                    best = Checkpoint {
                        network,
                        target: input.target,
                        noise: input.noise,
                        optimizer: input.optimizer,
                        constraint_history: history,
                        trace,
                        seed: input.seed,
                    };
                    streak = 0;
                } else {
                    streak += 1;
                }
            }
            if phase == 0 {
                fixed_ensemble.push(best.clone());
            } else {
                ranged_ensemble.push(best.clone());
            }
        }
    }

    Ok(RetrainOutcome {
        final_checkpoint: best,
        fixed_ensemble,
        ranged_ensemble,
    })
}

fn seed_of(stream: &Stream) -> u64 {
    use rand::RngCore;
    stream.rng().next_u64()
}
