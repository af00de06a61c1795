//! Command-line surface.

mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::arma::NoiseKind;
use crate::baseline::{Criterion, SearchConfig, SearchMode};
use crate::error::{Error, Result};
use crate::eval::{chenoweth_subset, evaluate_method, gen_test_suite, OrderPredictor, TestSuite};
use crate::identify::{predict_order, Identifier};
use crate::io;
use crate::net::{NetworkConfig, Variant};
use crate::rng::Stream;
use crate::train::{
    progressive_retrain, train, Checkpoint, OptimizerKind, OrderKind, RetrainOptions, TrainOptions,
};

#[derive(Parser)]
#[command(
    name = "armaid",
    version,
    about = "ARMA order identification: convolutional classifiers vs AIC/BIC selection"
)]
struct Cli {
    /// Base seed for all randomized work.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Single-threaded execution with zeroed wall-time fields, for
    /// byte-reproducible outputs.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled test suite file.
    Simulate(SimulateArgs),
    /// Train a classifier on freshly simulated batches.
    Train(TrainArgs),
    /// Progressively retrain a checkpoint under opposite-order constraints.
    Retrain(RetrainArgs),
    /// Repeat training over a hyper-parameter grid, one CSV row per run.
    Sweep(SweepArgs),
    /// Run a classifier assembly over a suite or a single series.
    Identify(IdentifyArgs),
    /// Run AIC/BIC selection over a suite.
    Baseline(BaselineArgs),
    /// Evaluate a method over a suite and emit the report.
    Bench(BenchArgs),
    /// Both-order accuracy over the order<=2 subset excluding (0,0).
    SubsetChenoweth(SubsetArgs),
    /// Run the built-in verification checks.
    Selftest,
}

#[derive(Args)]
struct SimulateArgs {
    /// Noise distribution: normal | t2.
    #[arg(long, default_value = "normal")]
    noise: String,
    /// Batches of 100 series (one per (p,q) combination).
    #[arg(long, default_value_t = 1)]
    batches: usize,
    #[arg(long, default_value_t = 1000)]
    length: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Which order to classify: ar | ma.
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "normal")]
    noise: String,
    /// Architecture: plain | original | relu-before-addition | full-pre-activation.
    #[arg(long, default_value = "relu-before-addition")]
    variant: String,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, default_value_t = 7)]
    kw: usize,
    #[arg(long, default_value_t = 8)]
    features: usize,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 1000)]
    length: usize,
    /// Opposite-order values, e.g. "0..9", "0,1,2" or "3".
    #[arg(long, default_value = "0..9")]
    opposite: String,
    /// Optimizer: nag | adam.
    #[arg(long, default_value = "nag")]
    optimizer: String,
    #[arg(long, default_value_t = 0.75)]
    momentum: f64,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    /// Batches per schedule window.
    #[arg(long, default_value_t = 100)]
    window: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-window trace CSV here.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Args)]
struct RetrainArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Directory receiving final.arid plus the fixed-k and ranged-k
    /// ensemble checkpoints.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 9)]
    max_opposite: usize,
    #[arg(long, default_value_t = 100)]
    window: usize,
    #[arg(long, default_value_t = 0.5)]
    reset_lr: f64,
    #[arg(long, default_value_t = 6)]
    round_patience: usize,
    #[arg(long, default_value_t = 30)]
    round_cap: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "normal")]
    noise: String,
    #[arg(
        long,
        default_value = "plain,original,relu-before-addition,full-pre-activation"
    )]
    variants: String,
    #[arg(long, default_value = "8,12,16,20,24")]
    depths: String,
    #[arg(long, default_value = "7,11,15")]
    kws: String,
    #[arg(long, default_value = "8,20,32,44,56,68")]
    features: String,
    /// Training repetitions per configuration.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 1000)]
    length: usize,
    #[arg(long, default_value_t = 100)]
    window: usize,
    #[arg(long, default_value = "nag")]
    optimizer: String,
    #[arg(long, default_value_t = 0.75)]
    momentum: f64,
    #[arg(long, default_value = "0..9")]
    opposite: String,
    #[arg(long)]
    out_csv: PathBuf,
}

#[derive(Args)]
struct IdentifyArgs {
    /// AR-order checkpoint.
    #[arg(long)]
    ar: PathBuf,
    /// MA-order checkpoint (separate assembly).
    #[arg(long)]
    ma: Option<PathBuf>,
    /// Directory of fixed-k ensemble checkpoints (joint assembly).
    #[arg(long)]
    ensemble_dir: Option<PathBuf>,
    #[arg(long)]
    suite: Option<PathBuf>,
    /// A single raw series, one value per line.
    #[arg(long)]
    series_csv: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    report_csv: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    /// aic | bic.
    #[arg(long, default_value = "bic")]
    criterion: String,
    /// full | stepwise.
    #[arg(long, default_value = "full")]
    mode: String,
    #[arg(long)]
    suite: PathBuf,
    #[arg(long, default_value_t = 9)]
    p_max: usize,
    #[arg(long, default_value_t = 9)]
    q_max: usize,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    report_csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// cnn-separate | cnn-joint | aic-full | aic-stepwise | bic-full | bic-stepwise.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    suite: PathBuf,
    #[arg(long)]
    ar: Option<PathBuf>,
    #[arg(long)]
    ma: Option<PathBuf>,
    #[arg(long)]
    ensemble_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 9)]
    p_max: usize,
    #[arg(long, default_value_t = 9)]
    q_max: usize,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    report_csv: Option<PathBuf>,
    /// Run every method over the suite (the complete comparison table).
    /// With a 10,000-series suite the likelihood columns take days of CPU
    /// time; see the README for expectations.
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct SubsetArgs {
    /// Per-series CSV produced by identify/baseline/bench.
    #[arg(long)]
    per_series: PathBuf,
}

/// Entry point: expands `--config`, parses, configures the pool, dispatches.
pub fn main_entry() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match expand_config(argv) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            // clap reports usage problems with exit code 2.
            e.exit();
        }
    };

    let threads = if cli.deterministic { 1 } else { cli.threads };
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Reads `--config FILE` (key=value lines, `#` comments) and injects each
/// key as a long flag unless already given on the command line, so explicit
/// flags win. Unknown keys are rejected by the parser afterwards.
fn expand_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    if pos + 1 >= argv.len() {
        return Err(Error::InvalidArgument(
            "--config requires a file path".into(),
        ));
    }
    let path = argv.remove(pos + 1);
    argv.remove(pos);
    let text = std::fs::read_to_string(&path)?;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("{path}:{}: expected key=value", ln + 1))
        })?;
        let flag = format!("--{}", key.trim());
        if !argv.contains(&flag) {
            argv.push(flag);
            argv.push(value.trim().to_string());
        }
    }
    Ok(argv)
}

/// Prints a usage problem and exits with the conventional code 2.
fn usage_exit(msg: &str) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(2);
}

/// Confirms an output path is writable before long work starts, leaving an
/// empty placeholder that the real write later replaces.
fn probe_writable(path: &Path) -> Result<()> {
    std::fs::File::create(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(cli, a),
        Command::Train(a) => run_train(cli, a),
        Command::Retrain(a) => run_retrain(cli, a),
        Command::Sweep(a) => run_sweep(cli, a),
        Command::Identify(a) => run_identify(cli, a),
        Command::Baseline(a) => run_baseline(cli, a),
        Command::Bench(a) => run_bench(cli, a),
        Command::SubsetChenoweth(a) => run_subset(a),
        Command::Selftest => selftest::run(),
    }
}

fn run_simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let noise = NoiseKind::from_tag(&a.noise)?;
    let suite = gen_test_suite(noise, a.batches, a.length, cli.seed)?;
    io::save_suite(&suite, &a.out)?;
    println!(
        "wrote suite: {} series of length {} ({} noise) -> {}",
        suite.series.len(),
        a.length,
        noise.tag(),
        a.out.display()
    );
    Ok(())
}

fn parse_order_set(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("cannot parse order set `{text}`"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.parse().map_err(|_| bad())?;
        let hi: usize = hi.parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|part| part.trim().parse::<usize>().map_err(|_| bad()))
        .collect()
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad list entry `{p}`")))
        })
        .collect()
}

fn make_optimizer(name: &str, momentum: f64) -> Result<OptimizerKind> {
    match name {
        "nag" => Ok(OptimizerKind::Nag { momentum }),
        "adam" => Ok(OptimizerKind::default_adam()),
        other => Err(Error::InvalidArgument(format!(
            "unknown optimizer `{other}`"
        ))),
    }
}

fn run_train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let cfg = NetworkConfig::new(
        Variant::from_tag(&a.variant)?,
        a.depth,
        a.kw,
        a.features,
        a.classes,
        a.length,
    )?;
    let target = OrderKind::from_tag(&a.target)?;
    probe_writable(&a.out)?;
    if let Some(trace) = &a.trace_csv {
        probe_writable(trace)?;
    }
    let mut opts = TrainOptions::new(
        NoiseKind::from_tag(&a.noise)?,
        make_optimizer(&a.optimizer, a.momentum)?,
        cli.seed,
        a.length,
    );
    opts.opposite_range = parse_order_set(&a.opposite)?;
    opts.initial_lr = a.lr;
    opts.window_batches = a.window;
    opts.deterministic = cli.deterministic;

    println!(
        "training cnn-{} ({}, depth {}, kw {}, features {}, {} params) ...",
        target.tag(),
        cfg.variant.tag(),
        cfg.depth,
        cfg.kernel_width,
        cfg.features,
        cfg.param_count()
    );
    let ckpt = train(cfg, target, &opts)?;
    println!(
        "stopped after {} batches ({} windows), final mean error {:.4}",
        ckpt.trace.total_batches,
        ckpt.trace.window_means.len(),
        ckpt.mean_error()
    );
    io::save_checkpoint(&ckpt, &a.out)?;
    println!("wrote checkpoint -> {}", a.out.display());
    if let Some(trace) = &a.trace_csv {
        io::write_trace_csv(&ckpt.trace, trace)?;
        println!("wrote trace -> {}", trace.display());
    }
    Ok(())
}

fn run_retrain(cli: &Cli, a: &RetrainArgs) -> Result<()> {
    let input = io::load_checkpoint(&a.checkpoint)?;
    std::fs::create_dir_all(&a.out_dir)?;
    probe_writable(&a.out_dir.join("final.arid"))?;
    let mut opts = RetrainOptions::new(cli.seed);
    opts.max_opposite = a.max_opposite;
    opts.window_batches = a.window;
    opts.reset_lr = a.reset_lr;
    opts.round_patience = a.round_patience;
    opts.round_cap = a.round_cap;

    println!(
        "retraining cnn-{} from mean error {:.4} ...",
        input.target.tag(),
        input.mean_error()
    );
    let outcome = progressive_retrain(&input, &opts)?;
    let final_path = a.out_dir.join("final.arid");
    io::save_checkpoint(&outcome.final_checkpoint, &final_path)?;
    println!(
        "final mean error {:.4} -> {}",
        outcome.final_checkpoint.mean_error(),
        final_path.display()
    );
    for (k, ckpt) in outcome.fixed_ensemble.iter().enumerate() {
        let path = a.out_dir.join(format!("fixed-{k}.arid"));
        io::save_checkpoint(ckpt, &path)?;
    }
    for (i, ckpt) in outcome.ranged_ensemble.iter().enumerate() {
        let path = a.out_dir.join(format!("ranged-{}.arid", i + 1));
        io::save_checkpoint(ckpt, &path)?;
    }
    println!(
        "wrote {} fixed and {} ranged ensemble checkpoints -> {}",
        outcome.fixed_ensemble.len(),
        outcome.ranged_ensemble.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn run_sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    use std::io::Write;
    let target = OrderKind::from_tag(&a.target)?;
    let noise = NoiseKind::from_tag(&a.noise)?;
    let variants: Vec<Variant> = a
        .variants
        .split(',')
        .map(|v| Variant::from_tag(v.trim()))
        .collect::<Result<_>>()?;
    let depths = parse_usize_list(&a.depths)?;
    let kws = parse_usize_list(&a.kws)?;
    let features = parse_usize_list(&a.features)?;
    let opposite = parse_order_set(&a.opposite)?;

    let mut out = std::fs::File::create(&a.out_csv)?;
    writeln!(
        out,
        "variant,depth,kw,features,params,repeat,seed,final_mean_error,best_mean_error,windows,total_batches,wall_seconds"
    )?;
    let mut run_index = 0u64;
    for &variant in &variants {
        for &depth in &depths {
            for &kw in &kws {
                for &feat in &features {
                    let cfg = NetworkConfig::new(variant, depth, kw, feat, a.classes, a.length)?;
                    for repeat in 0..a.repeats {
                        use rand::RngCore;
                        let seed = Stream::root(cli.seed)
                            .child("sweep", &[run_index])
                            .rng()
                            .next_u64();
                        run_index += 1;
                        let mut opts = TrainOptions::new(
                            noise,
                            make_optimizer(&a.optimizer, a.momentum)?,
                            seed,
                            a.length,
                        );
                        opts.opposite_range = opposite.clone();
                        opts.window_batches = a.window;
                        opts.deterministic = cli.deterministic;
                        let ckpt = train(cfg, target, &opts)?;
                        let best = ckpt
                            .trace
                            .window_means
                            .iter()
                            .copied()
                            .fold(f64::INFINITY, f64::min);
                        writeln!(
                            out,
                            "{},{},{},{},{},{},{},{},{},{},{},{}",
                            variant.tag(),
                            depth,
                            kw,
                            feat,
                            cfg.param_count(),
                            repeat,
                            seed,
                            ckpt.mean_error(),
                            best,
                            ckpt.trace.window_means.len(),
                            ckpt.trace.total_batches,
                            ckpt.trace.wall_seconds
                        )?;
                        println!(
                            "{} d{} k{} f{} rep {}: mean error {:.4}",
                            variant.tag(),
                            depth,
                            kw,
                            feat,
                            repeat,
                            ckpt.mean_error()
                        );
                    }
                }
            }
        }
    }
    println!("wrote sweep results -> {}", a.out_csv.display());
    Ok(())
}

fn load_ensemble(dir: &Path, classes: usize) -> Result<Vec<Checkpoint>> {
    (0..classes)
        .map(|k| {
            let path = dir.join(format!("fixed-{k}.arid"));
            if path.exists() {
                io::load_checkpoint(&path)
            } else {
                io::load_checkpoint(&dir.join(format!("ranged-{k}.arid")))
            }
        })
        .collect()
}

fn build_identifier(
    ar: &Path,
    ma: Option<&Path>,
    ensemble_dir: Option<&Path>,
) -> Result<Identifier> {
    let ar_ckpt = io::load_checkpoint(ar)?;
    match (ma, ensemble_dir) {
        (_, Some(dir)) => {
            let ensemble = load_ensemble(dir, ar_ckpt.config().num_classes)?;
            Identifier::joint(ar_ckpt, ensemble)
        }
        (Some(ma), None) => Identifier::separate(ar_ckpt, io::load_checkpoint(ma)?),
        (None, None) => Err(Error::InvalidArgument(
            "provide --ma for the separate assembly or --ensemble-dir for the joint one".into(),
        )),
    }
}

fn report_out(
    report: &crate::eval::EvalReport,
    rows: &[crate::eval::SeriesRow],
    out_csv: Option<&Path>,
    report_csv: Option<&Path>,
) -> Result<()> {
    println!("{}", report.text_table());
    println!("{}", report.confusion_tables());
    if let Some(path) = out_csv {
        io::write_series_rows(rows, path)?;
        println!("wrote per-series rows -> {}", path.display());
    }
    if let Some(path) = report_csv {
        io::write_report_csv(report, path)?;
        println!("wrote report -> {}", path.display());
    }
    Ok(())
}

fn run_identify(_cli: &Cli, a: &IdentifyArgs) -> Result<()> {
    let identifier = build_identifier(&a.ar, a.ma.as_deref(), a.ensemble_dir.as_deref())?;
    if let Some(series_path) = &a.series_csv {
        let text = std::fs::read_to_string(series_path)?;
        let values: Vec<f64> = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad series value `{s}`")))
            })
            .collect::<Result<_>>()?;
        let series = crate::arma::TimeSeries::unlabeled(values);
        let pred = identifier.identify(&series)?;
        let (_, ar_probs) = predict_order(identifier.ar_checkpoint(), &series)?;
        println!("p_hat={} q_hat={} score={:.6}", pred.p, pred.q, pred.score);
        let probs = ar_probs
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
            .join(" ");
        println!("ar probabilities: {probs}");
        return Ok(());
    }
    let suite_path = a
        .suite
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("provide --suite or --series-csv".into()))?;
    let suite = io::load_suite(suite_path)?;
    let (report, rows) = evaluate_method(&identifier, &suite)?;
    report_out(
        &report,
        &rows,
        a.out_csv.as_deref(),
        a.report_csv.as_deref(),
    )
}

fn run_baseline(_cli: &Cli, a: &BaselineArgs) -> Result<()> {
    let cfg = SearchConfig {
        criterion: Criterion::from_tag(&a.criterion)?,
        mode: SearchMode::from_tag(&a.mode)?,
        p_max: a.p_max,
        q_max: a.q_max,
    };
    let suite = io::load_suite(&a.suite)?;
    let (report, rows) = evaluate_method(&cfg, &suite)?;
    report_out(
        &report,
        &rows,
        a.out_csv.as_deref(),
        a.report_csv.as_deref(),
    )
}

fn run_bench(cli: &Cli, a: &BenchArgs) -> Result<()> {
    let suite = io::load_suite(&a.suite)?;
    if a.full {
        return run_bench_full(cli, a, &suite);
    }
    let Some(method) = &a.method else {
        usage_exit("--method is required (or use --full)");
    };
    let boxed: Box<dyn OrderPredictor> = match method.as_str() {
        "cnn-separate" => {
            let Some(ar) = &a.ar else {
                usage_exit("cnn-separate needs --ar CHECKPOINT");
            };
            let Some(ma) = &a.ma else {
                usage_exit("cnn-separate needs --ma CHECKPOINT");
            };
            Box::new(build_identifier(ar, Some(ma), None)?)
        }
        "cnn-joint" => {
            let Some(ar) = &a.ar else {
                usage_exit("cnn-joint needs --ar CHECKPOINT");
            };
            let Some(dir) = &a.ensemble_dir else {
                usage_exit("cnn-joint needs --ensemble-dir DIR");
            };
            Box::new(build_identifier(ar, None, Some(dir))?)
        }
        other => {
            let (crit, mode) = match other {
                "aic-full" => (Criterion::Aic, SearchMode::Full),
                "aic-stepwise" => (Criterion::Aic, SearchMode::Stepwise),
                "bic-full" => (Criterion::Bic, SearchMode::Full),
                "bic-stepwise" => (Criterion::Bic, SearchMode::Stepwise),
                _ => usage_exit(&format!("unknown method `{other}`")),
            };
            Box::new(SearchConfig {
                criterion: crit,
                mode,
                p_max: a.p_max,
                q_max: a.q_max,
            })
        }
    };
    let (report, rows) = evaluate_method(boxed.as_ref(), &suite)?;
    report_out(
        &report,
        &rows,
        a.out_csv.as_deref(),
        a.report_csv.as_deref(),
    )
}

/// The complete comparison: every likelihood method plus any classifier
/// assemblies for which checkpoints were provided.
fn run_bench_full(_cli: &Cli, a: &BenchArgs, suite: &TestSuite) -> Result<()> {
    println!(
        "full comparison over {} series; with 10,000-series suites the full \
         likelihood searches take on the order of days of CPU time\n",
        suite.series.len()
    );
    let mut methods: Vec<(String, Box<dyn OrderPredictor>)> = Vec::new();
    for (crit, mode) in [
        (Criterion::Aic, SearchMode::Stepwise),
        (Criterion::Aic, SearchMode::Full),
        (Criterion::Bic, SearchMode::Stepwise),
        (Criterion::Bic, SearchMode::Full),
    ] {
        let cfg = SearchConfig {
            criterion: crit,
            mode,
            p_max: a.p_max,
            q_max: a.q_max,
        };
        methods.push((cfg.tag(), Box::new(cfg)));
    }
    if let Some(ar) = &a.ar {
        if let Some(ma) = &a.ma {
            let id = build_identifier(ar, Some(ma), None)?;
            methods.push((id.name(), Box::new(id)));
        }
        if let Some(dir) = &a.ensemble_dir {
            let id = build_identifier(ar, None, Some(dir))?;
            methods.push((id.name(), Box::new(id)));
        }
    }
    for (name, method) in &methods {
        let (report, rows) = evaluate_method(method.as_ref(), suite)?;
        println!("=== {name} ===");
        println!("{}", report.text_table());
        if let Some(base) = &a.out_csv {
            let path = base.with_file_name(format!(
                "{}-{name}.csv",
                base.file_stem().and_then(|s| s.to_str()).unwrap_or("rows")
            ));
            io::write_series_rows(&rows, &path)?;
        }
        if let Some(base) = &a.report_csv {
            let path = base.with_file_name(format!(
                "{}-{name}.csv",
                base.file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("report")
            ));
            io::write_report_csv(&report, &path)?;
        }
    }
    Ok(())
}

fn run_subset(a: &SubsetArgs) -> Result<()> {
    let rows = io::read_series_rows(&a.per_series)?;
    let (acc, (lo, hi), count) = chenoweth_subset(&rows)?;
    println!("subset series: {count}");
    println!("both-order accuracy: {acc:.2}% (95% C.I. [{lo:.2}, {hi:.2}])");
    Ok(())
}
