//! Acceptance suite: one test per release criterion, each printing a
//! `[criterion N] PASS` line with the measured figure. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use rayon::prelude::*;

use armaid::arma::{
    gen_coefficients, poly_min_root_modulus, simulate_arma, ArmaSpec, NoiseKind, PolyRole,
    ROOT_MARGIN,
};
use armaid::baseline::{
    dense_gaussian_loglik, fit_arma, full_search, kalman_loglik, stepwise_search, Criterion,
    SearchConfig, SearchMode,
};
use armaid::eval::{evaluate_method, gen_test_suite};
use armaid::identify::{predict_order, Identifier};
use armaid::io;
use armaid::net::{grad_check, NetworkConfig, Variant};
use armaid::rng::Stream;
use armaid::train::{
    measure_mean_error, progressive_retrain, train, Checkpoint, OptimizerKind, OrderKind,
    RetrainOptions, TrainOptions,
};

fn pass(criterion: usize, detail: &str) {
    println!("[criterion {criterion:2}] PASS — {detail}");
}

#[test]
fn criterion_01_parameter_count_exactness() {
    let count = |variant, d, k, f| {
        NetworkConfig::new(variant, d, k, f, 10, 1000)
            .unwrap()
            .param_count()
    };
    assert_eq!(count(Variant::ReluBeforeAddition, 8, 7, 8), 3_502);
    assert_eq!(count(Variant::ReluBeforeAddition, 24, 15, 68), 1_541_862);
    assert_eq!(count(Variant::ReluBeforeAddition, 16, 15, 68), 985_350);
    assert_eq!(count(Variant::Original, 8, 15, 68), 428_838);
    assert_eq!(count(Variant::FullPreActivation, 20, 15, 44), 532_518);
    assert_eq!(count(Variant::ReluBeforeAddition, 24, 15, 44), 649_206);
    assert_eq!(count(Variant::Original, 12, 15, 56), 481_518);
    assert_eq!(count(Variant::FullPreActivation, 20, 15, 68), 1_263_606);
    pass(
        1,
        "published sizes 3,502 / 1,541,862 / 985,350 / 428,838 / 532,518 exact",
    );
}

#[test]
fn criterion_02_gradient_correctness_all_variants() {
    let mut worst = 0.0f64;
    for (i, variant) in Variant::all().into_iter().enumerate() {
        let cfg = NetworkConfig::new(variant, 8, 7, 8, 10, 64).unwrap();
        let report = grad_check(cfg, 4, 200, &Stream::root(7_000 + i as u64)).unwrap();
        assert!(
            report.max_rel_err < 1e-5,
            "{variant:?}: max rel err {}",
            report.max_rel_err
        );
        worst = worst.max(report.max_rel_err);
    }
    pass(
        2,
        &format!("4 variants, 200 coords each, worst rel err {worst:.2e} < 1e-5"),
    );
}

#[test]
fn criterion_03_stationarity_and_invertibility_property() {
    let root = Stream::root(7_100);
    let cases: Vec<(usize, &str, PolyRole)> = (1..=9usize)
        .flat_map(|o| [(o, "ar", PolyRole::Ar), (o, "ma", PolyRole::Ma)])
        .collect();
    cases.par_iter().for_each(|&(order, tag, role)| {
        for rep in 0..10_000u64 {
            let mut rng = root.child(tag, &[order as u64, rep]).rng();
            let coeffs = gen_coefficients(order, role, &mut rng)
                .expect("halving loop terminates within cap");
            let m = poly_min_root_modulus(&coeffs, role).unwrap();
            assert!(m > 1.0 + ROOT_MARGIN, "{tag} order {order} rep {rep}: {m}");
        }
    });
    pass(
        3,
        "10,000 draws per order 1..=9 per role all satisfy min root modulus > 1",
    );
}

#[test]
fn criterion_04_likelihood_oracle_equivalence() {
    let root = Stream::root(7_200);
    let worst = (0..50u64)
        .map(|rep| {
            let mut rng = root.child("model", &[rep]).rng();
            let p = (rep % 3) as usize;
            let q = ((rep / 3) % 3) as usize;
            let spec = ArmaSpec::generate(p, q, NoiseKind::Normal01, &mut rng).unwrap();
            let ts = simulate_arma(&spec, 40, &mut rng).unwrap();
            let sigma2 = 0.4 + 0.03 * rep as f64;
            let filter = kalman_loglik(&ts.values, spec.phi(), spec.theta(), sigma2).unwrap();
            let dense =
                dense_gaussian_loglik(&ts.values, spec.phi(), spec.theta(), sigma2).unwrap();
            let gap = (filter - dense).abs();
            assert!(gap < 1e-6, "rep {rep} ({p},{q}): gap {gap}");
            gap
        })
        .fold(0.0f64, f64::max);
    pass(
        4,
        &format!("50 random models at n=40, worst |filter - dense| = {worst:.2e} < 1e-6"),
    );
}

#[test]
fn criterion_05_criterion_identity() {
    let mut checked = 0usize;
    for (n, seed) in [(400usize, 60u64), (1000, 61)] {
        let mut rng = Stream::root(seed).child("data", &[]).rng();
        let spec = ArmaSpec::generate(1, 1, NoiseKind::Normal01, &mut rng).unwrap();
        let x = simulate_arma(&spec, n, &mut rng).unwrap().values;
        for p in 0..=2usize {
            for q in 0..=1usize {
                let fit = fit_arma(&x, p, q).unwrap();
                let k = fit.k() as f64;
                let identity = fit.bic - fit.aic - k * ((n as f64).ln() - 2.0);
                assert!(
                    identity.abs() < 1e-9,
                    "({p},{q}) at n={n}: residual {identity}"
                );
                checked += 1;
            }
        }
    }
    // n = 1000 gives the round-number factor 4.90776 per parameter.
    let factor = 1000f64.ln() - 2.0;
    assert!((factor - 4.907_755_278_982_137).abs() < 1e-12);
    pass(
        5,
        &format!("BIC - AIC = k(ln n - 2) to 1e-9 across {checked} fits"),
    );
}

#[test]
fn criterion_06_selection_consistency_on_white_noise() {
    let cfg = SearchConfig {
        criterion: Criterion::Bic,
        mode: SearchMode::Full,
        p_max: 2,
        q_max: 2,
    };
    let root = Stream::root(7_300);
    let hits: usize = (0..100u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&rep| {
            let spec = ArmaSpec::new(vec![], vec![], NoiseKind::Normal01).unwrap();
            let mut rng = root.child("wn", &[rep]).rng();
            let x = simulate_arma(&spec, 1000, &mut rng).unwrap().values;
            let out = full_search(&x, &cfg).unwrap();
            usize::from((out.p, out.q) == (0, 0))
        })
        .sum();
    assert!(
        hits >= 50,
        "full BIC chose (0,0) on only {hits}/100 white-noise series"
    );
    pass(
        6,
        &format!("full BIC selected (0,0) on {hits}/100 white-noise series (>= 50 required)"),
    );
}

#[test]
fn criterion_07_stepwise_dominance_and_economy() {
    let root = Stream::root(7_400);
    let specs = [
        ArmaSpec::new(vec![], vec![], NoiseKind::Normal01).unwrap(),
        ArmaSpec::new(vec![0.6], vec![0.3], NoiseKind::Normal01).unwrap(),
    ];
    let cfg_full = SearchConfig::new(Criterion::Bic, SearchMode::Full);
    let cfg_step = SearchConfig::new(Criterion::Bic, SearchMode::Stepwise);
    let mut details = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let mut rng = root.child("series", &[i as u64]).rng();
        let x = simulate_arma(spec, 250, &mut rng).unwrap().values;
        let full = full_search(&x, &cfg_full).unwrap();
        let step = stepwise_search(&x, &cfg_step).unwrap();
        assert!(
            full.criterion_value <= step.criterion_value + 1e-12,
            "series {i}: full {} > stepwise {}",
            full.criterion_value,
            step.criterion_value
        );
        assert_eq!(full.evaluated.len(), 100);
        assert!(
            step.evaluated.len() < full.evaluated.len(),
            "series {i}: stepwise visited {} of {}",
            step.evaluated.len(),
            full.evaluated.len()
        );
        details.push(format!("{} fits vs 100", step.evaluated.len()));
    }
    pass(
        7,
        &format!(
            "full <= stepwise criterion on every series; stepwise visited {}",
            details.join(", ")
        ),
    );
}

fn desk_train(seed: u64) -> (Checkpoint, f64) {
    let cfg = NetworkConfig::new(Variant::ReluBeforeAddition, 8, 7, 8, 3, 1000).unwrap();
    let mut opts = TrainOptions::new(
        NoiseKind::Normal01,
        OptimizerKind::default_nag(),
        seed,
        1000,
    );
    opts.opposite_range = vec![0];
    // Half-size windows keep the desk run inside a few minutes; the
    // schedule semantics are unchanged.
    opts.window_batches = 50;
    let ckpt = train(cfg, OrderKind::Ar, &opts).unwrap();

    let root = Stream::root(seed ^ 0xabcd);
    let hits: usize = (0..300u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&rep| {
            let p = (rep % 3) as usize;
            let mut rng = root.child("fresh", &[rep]).rng();
            let spec = ArmaSpec::generate(p, 0, NoiseKind::Normal01, &mut rng).unwrap();
            let ts = simulate_arma(&spec, 1000, &mut rng).unwrap();
            let (order, _) = predict_order(&ckpt, &ts).unwrap();
            usize::from(order == p)
        })
        .sum();
    (ckpt, hits as f64 / 3.0)
}

#[test]
fn criterion_08_desk_scale_learning_signal() {
    // Untrained calibration: mean error of a fresh classifier sits at ln 3.
    let cfg = NetworkConfig::new(Variant::ReluBeforeAddition, 8, 7, 8, 3, 1000).unwrap();
    let mut fresh = armaid::net::Network::init(cfg, &Stream::root(555)).unwrap();
    let mut mopts = TrainOptions::new(NoiseKind::Normal01, OptimizerKind::default_nag(), 556, 1000);
    mopts.opposite_range = vec![0];
    mopts.window_batches = 15;
    let untrained = measure_mean_error(&mut fresh, OrderKind::Ar, &mopts, 20).unwrap();
    let baseline = 3.0f64.ln();
    assert!(
        (untrained - baseline).abs() < 0.1,
        "untrained mean error {untrained} vs ln 3 = {baseline}"
    );

    // One seed retry is allowed for the statistical accuracy gate.
    let (acc, seed_used) = {
        let (_, acc) = desk_train(81);
        if acc > 60.0 {
            (acc, 81)
        } else {
            let (_, acc2) = desk_train(82);
            (acc2, 82)
        }
    };
    assert!(
        acc > 60.0,
        "desk-scale accuracy {acc:.1}% (seed {seed_used}) <= 60%"
    );
    pass(
        8,
        &format!(
            "untrained mean error {untrained:.4} (ln 3 = {baseline:.4}); trained accuracy {acc:.1}% > 60% on 300 fresh series"
        ),
    );
}

#[test]
fn criterion_09_progressive_retraining_monotonicity() {
    let cfg = NetworkConfig::new(Variant::ReluBeforeAddition, 4, 3, 4, 2, 100).unwrap();
    let mut opts = TrainOptions::new(NoiseKind::Normal01, OptimizerKind::default_nag(), 91, 100);
    opts.opposite_range = vec![0];
    opts.window_batches = 10;
    let input = train(cfg, OrderKind::Ar, &opts).unwrap();

    let mut ropts = RetrainOptions::new(92);
    ropts.max_opposite = 1;
    ropts.round_patience = 2;
    ropts.round_cap = 3;
    ropts.window_batches = 10;
    let outcome = progressive_retrain(&input, &ropts).unwrap();

    assert!(
        outcome.final_checkpoint.mean_error() <= input.mean_error(),
        "final {} > input {}",
        outcome.final_checkpoint.mean_error(),
        input.mean_error()
    );
    assert_eq!(outcome.fixed_ensemble.len(), 2);
    assert_eq!(outcome.ranged_ensemble.len(), 1);
    let mut chain = vec![input.mean_error()];
    chain.extend(outcome.fixed_ensemble.iter().map(|c| c.mean_error()));
    chain.push(outcome.final_checkpoint.mean_error());
    for w in chain.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "selection chain rose: {chain:?}");
    }
    pass(
        9,
        &format!(
            "mean error {:.4} -> {:.4}, selection chain monotone",
            input.mean_error(),
            outcome.final_checkpoint.mean_error()
        ),
    );
}

fn dummy_checkpoint(target: OrderKind, seed: u64) -> Checkpoint {
    let cfg = NetworkConfig::new(Variant::Original, 4, 3, 4, 10, 64).unwrap();
    Checkpoint {
        network: armaid::net::Network::init(cfg, &Stream::root(seed)).unwrap(),
        target,
        noise: NoiseKind::Normal01,
        optimizer: OptimizerKind::default_nag(),
        constraint_history: vec![],
        trace: armaid::train::TrainTrace {
            final_mean_error: 2.3,
            window_means: vec![2.3],
            window_lrs: vec![0.1],
            window_wall: vec![0.0],
            total_batches: 1,
            wall_seconds: 0.0,
        },
        seed,
    }
}

#[test]
fn criterion_10_report_integrity_and_round_trips() {
    let suite = gen_test_suite(NoiseKind::Normal01, 2, 64, 1234).unwrap();
    let ar = dummy_checkpoint(OrderKind::Ar, 1);
    let ma = dummy_checkpoint(OrderKind::Ma, 2);
    let ensemble: Vec<Checkpoint> = (0..10)
        .map(|k| dummy_checkpoint(OrderKind::Ma, 100 + k))
        .collect();
    let separate = Identifier::separate(ar.clone(), ma).unwrap();
    let joint = Identifier::joint(ar, ensemble).unwrap();

    let (rep_sep, rows_sep) = evaluate_method(&separate, &suite).unwrap();
    let (rep_joint, _) = evaluate_method(&joint, &suite).unwrap();

    for report in [&rep_sep, &rep_joint] {
        for (m, empty) in [
            (&report.confusion_ar, &report.empty_rows_ar),
            (&report.confusion_ma, &report.empty_rows_ma),
        ] {
            for (i, row) in m.iter().enumerate() {
                if !empty.contains(&i) {
                    let s: f64 = row.iter().sum();
                    assert!((s - 100.0).abs() < 1e-9, "row {i} sums to {s}");
                }
            }
        }
        assert!(report.both_acc <= report.ar_acc.min(report.ma_acc) + 1e-12);
        assert_eq!(report.failed, 0);
    }
    // Shared AR stage: the AR confusion matrices agree entrywise.
    for (ra, rj) in rep_sep.confusion_ar.iter().zip(&rep_joint.confusion_ar) {
        for (a, b) in ra.iter().zip(rj) {
            assert!(
                (a.is_nan() && b.is_nan()) || a == b,
                "AR confusion differs: {a} vs {b}"
            );
        }
    }

    // Byte-exact persistence round trips.
    let dir = tempfile::tempdir().unwrap();
    let sp1 = dir.path().join("suite1.arts");
    let sp2 = dir.path().join("suite2.arts");
    io::save_suite(&suite, &sp1).unwrap();
    io::save_suite(&io::load_suite(&sp1).unwrap(), &sp2).unwrap();
    assert_eq!(std::fs::read(&sp1).unwrap(), std::fs::read(&sp2).unwrap());
    let cp1 = dir.path().join("c1.arid");
    let cp2 = dir.path().join("c2.arid");
    io::save_checkpoint(&separate.ar_checkpoint().clone(), &cp1).unwrap();
    io::save_checkpoint(&io::load_checkpoint(&cp1).unwrap(), &cp2).unwrap();
    assert_eq!(std::fs::read(&cp1).unwrap(), std::fs::read(&cp2).unwrap());

    let _ = rows_sep;
    pass(10, "confusion rows sum to 100, both <= min(ar, ma), shared AR stage identical, files byte-stable");
}

#[test]
fn criterion_11_full_scale_mode_is_exposed_not_reproduced() {
    // The published 10,000-series comparisons need days of CPU time and are
    // not reproduced here; the harness must expose the full mode instead.
    let bin = env!("CARGO_BIN_EXE_armaid");
    let help = std::process::Command::new(bin)
        .args(["bench", "--help"])
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&help.stdout);
    assert!(text.contains("--full"), "bench --help must document --full");
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md"))
        .expect("README.md present at the workspace root");
    assert!(
        readme.contains("--full"),
        "README must document the full reproduction mode"
    );
    pass(
        11,
        "full-scale reproduction exposed via `bench --full` and documented; not run at desk scale",
    );
}
