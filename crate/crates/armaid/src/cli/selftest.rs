//! Built-in verification: a table of checks over every numeric subsystem.

use crate::arma::{
    burn_in_length, gen_coefficients, poly_min_root_modulus, simulate_arma, standardize, ArmaSpec,
    NoiseKind, PolyRole, TimeSeries, ROOT_MARGIN,
};
use crate::baseline::transform::{stationary_from_unconstrained, unconstrained_from_stationary};
use crate::baseline::{dense_gaussian_loglik, kalman_loglik};
use crate::error::{Error, Result};
use crate::net::{grad_check, softmax_cross_entropy, NetworkConfig, Variant};
use crate::rng::Stream;
use crate::train::{Action, Schedule};

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<String>) -> Outcome {
    match run() {
        Ok(detail) => Outcome {
            name,
            passed: true,
            detail,
        },
        Err(e) => Outcome {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn ensure(cond: bool, msg: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg))
    }
}

pub fn run() -> Result<()> {
    let mut outcomes = Vec::new();

    outcomes.push(check("parameter counts", || {
        let mk = |d, k, f| {
            NetworkConfig::new(Variant::ReluBeforeAddition, d, k, f, 10, 1000)
                .map(|c| c.param_count())
        };
        for (d, k, f, expected) in [
            (8usize, 7usize, 8usize, 3_502usize),
            (24, 15, 68, 1_541_862),
            (16, 15, 68, 985_350),
            (8, 15, 68, 428_838),
            (20, 15, 44, 532_518),
        ] {
            let got = mk(d, k, f)?;
            ensure(
                got == expected,
                format!("({d},{k},{f}): {got} != {expected}"),
            )?;
        }
        Ok("5 published sizes exact".into())
    }));

    for (i, variant) in Variant::all().into_iter().enumerate() {
        let name: &'static str = match variant {
            Variant::Plain => "gradients (plain)",
            Variant::Original => "gradients (original)",
            Variant::ReluBeforeAddition => "gradients (relu-before-addition)",
            Variant::FullPreActivation => "gradients (full-pre-activation)",
        };
        outcomes.push(check(name, move || {
            let cfg = NetworkConfig::new(variant, 8, 7, 8, 10, 64)?;
            let report = grad_check(cfg, 4, 200, &Stream::root(1000 + i as u64))?;
            ensure(
                report.max_rel_err < 1e-5,
                format!("max rel err {}", report.max_rel_err),
            )?;
            Ok(format!(
                "max rel err {:.2e} over {} coords",
                report.max_rel_err, report.checked
            ))
        }));
    }

    outcomes.push(check("root finder", || {
        let m = poly_min_root_modulus(&[0.5], PolyRole::Ar)?;
        ensure((m - 2.0).abs() < 1e-10, format!("AR(0.5) min root {m}"))?;
        let m = poly_min_root_modulus(&[0.5, 0.5], PolyRole::Ar)?;
        ensure((m - 1.0).abs() < 1e-9, format!("AR(0.5,0.5) min root {m}"))?;
        Ok("analytic roots reproduced".into())
    }));

    outcomes.push(check("coefficient generation", || {
        let root = Stream::root(2000);
        for order in 1..=9usize {
            for (role, tag) in [(PolyRole::Ar, "ar"), (PolyRole::Ma, "ma")] {
                for rep in 0..100u64 {
                    let mut rng = root.child(tag, &[order as u64, rep]).rng();
                    let c = gen_coefficients(order, role, &mut rng)?;
                    let m = poly_min_root_modulus(&c, role)?;
                    ensure(
                        m > 1.0 + ROOT_MARGIN,
                        format!("order {order} rep {rep}: {m}"),
                    )?;
                }
            }
        }
        Ok("1800 draws all stable/invertible".into())
    }));

    outcomes.push(check("burn-in rule", || {
        ensure(burn_in_length(0, 3, f64::NAN)? == 3, "p=0 case".into())?;
        ensure(burn_in_length(1, 0, 2.0)? == 16, "log rule".into())?;
        ensure(burn_in_length(2, 1, 1.0002)? == 50_003, "cap".into())?;
        Ok("3 cases exact".into())
    }));

    outcomes.push(check("likelihood vs dense oracle", || {
        let root = Stream::root(3000);
        let mut worst = 0.0f64;
        for rep in 0..10u64 {
            let mut rng = root.child("model", &[rep]).rng();
            let spec = ArmaSpec::generate(
                (rep % 3) as usize,
                ((rep / 3) % 3) as usize,
                NoiseKind::Normal01,
                &mut rng,
            )?;
            let ts = simulate_arma(&spec, 40, &mut rng)?;
            let ll = kalman_loglik(&ts.values, spec.phi(), spec.theta(), 1.0)?;
            let oracle = dense_gaussian_loglik(&ts.values, spec.phi(), spec.theta(), 1.0)?;
            worst = worst.max((ll - oracle).abs());
        }
        ensure(worst < 1e-6, format!("worst gap {worst}"))?;
        Ok(format!("worst |gap| {worst:.2e} over 10 models"))
    }));

    outcomes.push(check("stationarity transform", || {
        let root = Stream::root(4000);
        let mut worst = 0.0f64;
        for rep in 0..200u64 {
            let mut rng = root.child("rt", &[rep]).rng();
            let phi = gen_coefficients(3, PolyRole::Ar, &mut rng)?;
            let u = unconstrained_from_stationary(&phi)?;
            let back = stationary_from_unconstrained(&u);
            for (a, b) in phi.iter().zip(&back) {
                worst = worst.max((a - b).abs());
            }
        }
        ensure(worst < 1e-10, format!("worst round trip {worst}"))?;
        Ok(format!("round-trip error {worst:.2e}"))
    }));

    outcomes.push(check("schedule chain", || {
        let mut s = Schedule::new(0.1);
        let mut halvings = 0;
        loop {
            match s.update(1.0) {
                Action::Continue => {}
                Action::Halve => halvings += 1,
                Action::Stop => break,
            }
        }
        ensure(halvings == 9, format!("{halvings} halvings"))?;
        ensure(
            (s.lr() - 0.1 / 512.0).abs() < 1e-18,
            format!("final lr {}", s.lr()),
        )?;
        Ok("9 halvings then stop below 1e-4".into())
    }));

    outcomes.push(check("standardize", || {
        let ts = TimeSeries::unlabeled(vec![1.0, 2.0, 3.0]);
        let out = standardize(&ts)?;
        ensure(
            out.values == vec![-1.0, 0.0, 1.0],
            format!("{:?}", out.values),
        )?;
        Ok("moments exact".into())
    }));

    outcomes.push(check("cross-entropy", || {
        let (loss, _) = softmax_cross_entropy(&[0.0; 10], 1, 10, &[7])?;
        ensure(
            (loss - 10.0f64.ln()).abs() < 1e-12,
            format!("uniform loss {loss}"),
        )?;
        Ok("uniform logits cost ln 10".into())
    }));

    outcomes.push(check("container round trip", || {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("armaid-selftest-{}.bin", std::process::id()));
        let header = vec![("k".to_string(), "v".to_string())];
        let tensors = vec![crate::io::Tensor::vector(vec![1.0, 2.0, 3.5])];
        crate::io::write_container(&path, *b"SELF", &header, &tensors)?;
        let (h, t) = crate::io::read_container(&path, *b"SELF")?;
        let _ = std::fs::remove_file(&path);
        ensure(h == header && t == tensors, "mismatch after reload".into())?;
        Ok("write/read/verify ok".into())
    }));

    let mut all_ok = true;
    println!("{:<36} {:<6} detail", "check", "state");
    for o in &outcomes {
        all_ok &= o.passed;
        println!(
            "{:<36} {:<6} {}",
            o.name,
            if o.passed { "pass" } else { "FAIL" },
            o.detail
        );
    }
    if all_ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument("self test failed".into()))
    }
}
