//! Test-suite generation, method evaluation and the comparison metrics:
//! accuracy with binomial confidence intervals, order mean-squared error and
//! row-normalized confusion matrices.

use std::time::Instant;

use rayon::prelude::*;

use crate::arma::{simulate_arma, ArmaSpec, NoiseKind, TimeSeries};
use crate::baseline::{run_search, SearchConfig};
use crate::error::{Error, Result};
use crate::identify::Identifier;
use crate::rng::Stream;

/// Highest order generated in test suites.
pub const MAX_ORDER: usize = 9;

/// A labeled evaluation suite: `batches` independent copies of the full
/// (p, q) grid.
#[derive(Clone, Debug)]
pub struct TestSuite {
    pub series: Vec<TimeSeries>,
    pub noise: NoiseKind,
    pub batches: usize,
    pub length: usize,
    pub seed: u64,
}

/// Generates one series per (p, q) in 0..=9 x 0..=9 per batch, with fresh
/// coefficients each, deterministically from the seed.
pub fn gen_test_suite(
    noise: NoiseKind,
    batches: usize,
    length: usize,
    seed: u64,
) -> Result<TestSuite> {
    if batches == 0 {
        return Err(Error::InvalidArgument("batches must be >= 1".into()));
    }
    let root = Stream::root(seed);
    let mut keys = Vec::with_capacity(batches * 100);
    for batch in 0..batches {
        for p in 0..=MAX_ORDER {
            for q in 0..=MAX_ORDER {
                keys.push((batch, p, q));
            }
        }
    }
    let series: Vec<TimeSeries> = keys
        .par_iter()
        .map(|&(batch, p, q)| {
            let mut rng = root
                .child("suite", &[batch as u64, p as u64, q as u64])
                .rng();
            let spec = ArmaSpec::generate(p, q, noise, &mut rng)?;
            simulate_arma(&spec, length, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(TestSuite {
        series,
        noise,
        batches,
        length,
        seed,
    })
}

/// 95% normal-approximation binomial confidence interval, in percent,
/// clipped to [0, 100].
pub fn binomial_ci(successes: usize, trials: usize) -> (f64, f64) {
    assert!(trials >= 1 && successes <= trials);
    let p = successes as f64 / trials as f64;
    let half = 1.96 * (p * (1.0 - p) / trials as f64).sqrt();
    (
        ((p - half) * 100.0).max(0.0),
        ((p + half) * 100.0).min(100.0),
    )
}

/// Mean squared difference between predicted and actual orders.
pub fn order_mse(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::EmptySubset);
    }
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / predicted.len() as f64)
}

/// Row-normalized confusion matrix in percent. Row i is the distribution of
/// predictions among series whose actual order is i; rows never observed are
/// NaN and reported in the flag list.
pub fn confusion_matrix(
    predicted: &[usize],
    actual: &[usize],
    classes: usize,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if predicted.len() != actual.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    let mut counts = vec![vec![0usize; classes]; classes];
    for (&pr, &ac) in predicted.iter().zip(actual) {
        if pr >= classes || ac >= classes {
            return Err(Error::LabelOutOfRange {
                label: pr.max(ac),
                classes,
            });
        }
        counts[ac][pr] += 1;
    }
    let mut matrix = vec![vec![f64::NAN; classes]; classes];
    let mut empty_rows = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        let total: usize = row.iter().sum();
        if total == 0 {
            empty_rows.push(i);
            continue;
        }
        for (j, &c) in row.iter().enumerate() {
            matrix[i][j] = 100.0 * c as f64 / total as f64;
        }
    }
    Ok((matrix, empty_rows))
}

/// One evaluated series, as written to the per-series CSV.
#[derive(Clone, Debug)]
pub struct SeriesRow {
    pub series_id: usize,
    pub p: usize,
    pub q: usize,
    /// None marks a failed prediction; failures are counted but excluded
    /// from every accuracy numerator and denominator.
    pub predicted: Option<(usize, usize)>,
    pub score: f64,
    pub wall_ms: f64,
}

/// All metrics for one method on one suite.
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub method: String,
    pub trials: usize,
    pub failed: usize,
    pub ar_acc: f64,
    pub ma_acc: f64,
    pub both_acc: f64,
    pub ar_ci: (f64, f64),
    pub ma_ci: (f64, f64),
    pub both_ci: (f64, f64),
    pub ar_mse: f64,
    pub ma_mse: f64,
    pub confusion_ar: Vec<Vec<f64>>,
    pub confusion_ma: Vec<Vec<f64>>,
    pub empty_rows_ar: Vec<usize>,
    pub empty_rows_ma: Vec<usize>,
    pub wall_hours: f64,
    /// Summed per-series compute time; distinct from wall time when series
    /// are evaluated in parallel.
    pub cpu_hours: f64,
}

/// Anything that maps a raw series to predicted (p, q) orders with a score
/// (classifier probability or criterion value).
pub trait OrderPredictor: Sync {
    fn name(&self) -> String;
    /// Predicts a group of series; one result per input, failures recorded
    /// per series.
    fn predict_many(&self, series: &[&TimeSeries]) -> Vec<Result<(usize, usize, f64)>>;
}

impl OrderPredictor for Identifier {
    fn name(&self) -> String {
        Identifier::name(self)
    }

    fn predict_many(&self, series: &[&TimeSeries]) -> Vec<Result<(usize, usize, f64)>> {
        match self.identify_many(series) {
            Ok(preds) => preds
                .into_iter()
                .map(|pr| Ok((pr.p, pr.q, pr.score)))
                .collect(),
            // Batched inference failed as a whole; fall back per series so
            // one bad input cannot take down its neighbors.
            Err(_) => series
                .iter()
                .map(|s| self.identify(s).map(|pr| (pr.p, pr.q, pr.score)))
                .collect(),
        }
    }
}

impl OrderPredictor for SearchConfig {
    fn name(&self) -> String {
        self.tag()
    }

    fn predict_many(&self, series: &[&TimeSeries]) -> Vec<Result<(usize, usize, f64)>> {
        series
            .iter()
            .map(|s| run_search(&s.values, self).map(|out| (out.p, out.q, out.criterion_value)))
            .collect()
    }
}

/// Batch size for grouped predictions.
const CHUNK: usize = 50;

/// Runs a method over every series of a suite and assembles the report plus
/// the per-series rows.
pub fn evaluate_method(
    method: &dyn OrderPredictor,
    suite: &TestSuite,
) -> Result<(EvalReport, Vec<SeriesRow>)> {
    if suite.series.is_empty() {
        return Err(Error::EmptySubset);
    }
    let start = Instant::now();
    let chunks: Vec<(usize, &[TimeSeries])> = suite
        .series
        .chunks(CHUNK)
        .enumerate()
        .map(|(i, c)| (i * CHUNK, c))
        .collect();
    let rows: Vec<SeriesRow> = chunks
        .par_iter()
        .flat_map(|&(base, chunk)| {
            let refs: Vec<&TimeSeries> = chunk.iter().collect();
            let t0 = Instant::now();
            let preds = method.predict_many(&refs);
            let per_series_ms = t0.elapsed().as_secs_f64() * 1000.0 / chunk.len() as f64;
            preds
                .into_iter()
                .enumerate()
                .map(|(i, res)| {
                    let (p, q) = chunk[i].label.expect("suite series are labeled");
                    match res {
                        Ok((ph, qh, score)) => SeriesRow {
                            series_id: base + i,
                            p,
                            q,
                            predicted: Some((ph, qh)),
                            score,
                            wall_ms: per_series_ms,
                        },
                        Err(_) => SeriesRow {
                            series_id: base + i,
                            p,
                            q,
                            predicted: None,
                            score: f64::NAN,
                            wall_ms: per_series_ms,
                        },
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let report = assemble_report(method.name(), &rows, start.elapsed().as_secs_f64() / 3600.0)?;
    Ok((report, rows))
}

/// Builds the metrics from per-series rows (exposed for report re-assembly
/// from saved CSVs).
pub fn assemble_report(method: String, rows: &[SeriesRow], wall_hours: f64) -> Result<EvalReport> {
    let ok_rows: Vec<&SeriesRow> = rows.iter().filter(|r| r.predicted.is_some()).collect();
    let failed = rows.len() - ok_rows.len();
    if ok_rows.is_empty() {
        return Err(Error::AllFitsFailed);
    }
    let trials = ok_rows.len();
    let actual_p: Vec<usize> = ok_rows.iter().map(|r| r.p).collect();
    let actual_q: Vec<usize> = ok_rows.iter().map(|r| r.q).collect();
    let pred_p: Vec<usize> = ok_rows.iter().map(|r| r.predicted.unwrap().0).collect();
    let pred_q: Vec<usize> = ok_rows.iter().map(|r| r.predicted.unwrap().1).collect();

    let ar_hits = pred_p.iter().zip(&actual_p).filter(|(a, b)| a == b).count();
    let ma_hits = pred_q.iter().zip(&actual_q).filter(|(a, b)| a == b).count();
    let both_hits = ok_rows
        .iter()
        .filter(|r| r.predicted.unwrap() == (r.p, r.q))
        .count();

    let classes = MAX_ORDER + 1;
    let (confusion_ar, empty_rows_ar) = confusion_matrix(&pred_p, &actual_p, classes)?;
    let (confusion_ma, empty_rows_ma) = confusion_matrix(&pred_q, &actual_q, classes)?;

    Ok(EvalReport {
        method,
        trials,
        failed,
        ar_acc: 100.0 * ar_hits as f64 / trials as f64,
        ma_acc: 100.0 * ma_hits as f64 / trials as f64,
        both_acc: 100.0 * both_hits as f64 / trials as f64,
        ar_ci: binomial_ci(ar_hits, trials),
        ma_ci: binomial_ci(ma_hits, trials),
        both_ci: binomial_ci(both_hits, trials),
        ar_mse: order_mse(&pred_p, &actual_p)?,
        ma_mse: order_mse(&pred_q, &actual_q)?,
        confusion_ar,
        confusion_ma,
        empty_rows_ar,
        empty_rows_ma,
        wall_hours,
        cpu_hours: rows.iter().map(|r| r.wall_ms).sum::<f64>() / 3.6e6,
    })
}

impl EvalReport {
    /// Aligned plain-text rendering of the headline metrics.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, label: &str, value: String| {
            out.push_str(&format!("{label:<22} {value}\n"));
        };
        push(&mut out, "Method", self.method.clone());
        push(
            &mut out,
            "Series evaluated",
            format!("{} ({} failed)", self.trials, self.failed),
        );
        push(&mut out, "AR (%)", format!("{:.2}", self.ar_acc));
        push(
            &mut out,
            "AR 95% C.I.",
            format!("[{:.2}, {:.2}]", self.ar_ci.0, self.ar_ci.1),
        );
        push(&mut out, "AR MSE", format!("{:.3}", self.ar_mse));
        push(&mut out, "MA (%)", format!("{:.2}", self.ma_acc));
        push(
            &mut out,
            "MA 95% C.I.",
            format!("[{:.2}, {:.2}]", self.ma_ci.0, self.ma_ci.1),
        );
        push(&mut out, "MA MSE", format!("{:.3}", self.ma_mse));
        push(
            &mut out,
            "Both correct (%)",
            format!("{:.2}", self.both_acc),
        );
        push(
            &mut out,
            "Both correct 95% C.I.",
            format!("[{:.2}, {:.2}]", self.both_ci.0, self.both_ci.1),
        );
        push(
            &mut out,
            "Time taken (hours)",
            format!("{:.4}", self.wall_hours),
        );
        push(
            &mut out,
            "CPU time (hours)",
            format!("{:.4}", self.cpu_hours),
        );
        out
    }

    /// Confusion matrices as an aligned text block.
    pub fn confusion_tables(&self) -> String {
        let mut out = String::new();
        for (tag, m) in [("AR", &self.confusion_ar), ("MA", &self.confusion_ma)] {
            out.push_str(&format!("Classified {tag} order (rows = actual, %):\n"));
            for row in m {
                for v in row {
                    if v.is_nan() {
                        out.push_str("     -");
                    } else {
                        out.push_str(&format!("{v:6.2}"));
                    }
                    out.push(' ');
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Both-order accuracy over the order<=2 subset excluding (0,0): the eight
/// smallest models, 800 series in a 10,000-series suite.
pub fn chenoweth_subset(rows: &[SeriesRow]) -> Result<(f64, (f64, f64), usize)> {
    let subset: Vec<&SeriesRow> = rows
        .iter()
        .filter(|r| r.p <= 2 && r.q <= 2 && !(r.p == 0 && r.q == 0))
        .collect();
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let usable: Vec<&&SeriesRow> = subset.iter().filter(|r| r.predicted.is_some()).collect();
    if usable.is_empty() {
        return Err(Error::EmptySubset);
    }
    let hits = usable
        .iter()
        .filter(|r| r.predicted.unwrap() == (r.p, r.q))
        .count();
    let acc = 100.0 * hits as f64 / usable.len() as f64;
    Ok((acc, binomial_ci(hits, usable.len()), usable.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn suite_covers_every_combination_per_batch() {
        let suite = gen_test_suite(NoiseKind::Normal01, 2, 64, 5).unwrap();
        assert_eq!(suite.series.len(), 200);
        let mut counts = std::collections::HashMap::new();
        for s in &suite.series {
            *counts.entry(s.label.unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 100);
        assert!(counts.values().all(|&c| c == 2));
    }

    #[test]
    fn suite_generation_is_deterministic() {
        let a = gen_test_suite(NoiseKind::StudentT2, 1, 64, 9).unwrap();
        let b = gen_test_suite(NoiseKind::StudentT2, 1, 64, 9).unwrap();
        for (x, y) in a.series.iter().zip(&b.series) {
            assert_eq!(x.values, y.values);
            assert_eq!(x.label, y.label);
        }
    }

    #[test]
    fn binomial_ci_examples() {
        let (lo, hi) = binomial_ci(5000, 10_000);
        assert_abs_diff_eq!(lo, 49.02, epsilon = 0.001);
        assert_abs_diff_eq!(hi, 50.98, epsilon = 0.001);
        assert_eq!(binomial_ci(10_000, 10_000), (100.0, 100.0));
        let (lo, hi) = binomial_ci(3523, 10_000);
        assert_abs_diff_eq!((hi - lo) / 2.0, 0.94, epsilon = 0.01);
    }

    #[test]
    fn order_mse_examples() {
        assert_eq!(order_mse(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(order_mse(&[2, 3, 4], &[1, 2, 3]).unwrap(), 1.0);
        assert!(order_mse(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn confusion_rows_sum_to_one_hundred() {
        let predicted = vec![0, 1, 2, 2, 1, 0, 1, 1, 2, 0];
        let actual = vec![0, 1, 2, 1, 1, 0, 2, 1, 2, 1];
        let (m, empty) = confusion_matrix(&predicted, &actual, 10).unwrap();
        for (i, row) in m.iter().enumerate() {
            if empty.contains(&i) {
                assert!(row.iter().all(|v| v.is_nan()));
            } else {
                assert_abs_diff_eq!(row.iter().sum::<f64>(), 100.0, epsilon = 1e-9);
            }
        }
        assert_eq!(empty, vec![3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn perfect_predictor_is_diagonal() {
        let labels = vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9];
        let (m, empty) = confusion_matrix(&labels, &labels, 10).unwrap();
        assert!(empty.is_empty());
        for i in 0..10 {
            assert_eq!(m[i][i], 100.0);
        }
    }

    struct FixedGuess(usize, usize);

    impl OrderPredictor for FixedGuess {
        fn name(&self) -> String {
            "fixed".into()
        }
        fn predict_many(&self, series: &[&TimeSeries]) -> Vec<Result<(usize, usize, f64)>> {
            series.iter().map(|_| Ok((self.0, self.1, 1.0))).collect()
        }
    }

    struct HashGuess;

    impl OrderPredictor for HashGuess {
        fn name(&self) -> String {
            "hash-guess".into()
        }
        fn predict_many(&self, series: &[&TimeSeries]) -> Vec<Result<(usize, usize, f64)>> {
            series
                .iter()
                .map(|s| {
                    let h = s.values[0].to_bits();
                    Ok(((h >> 7) as usize % 10, (h >> 17) as usize % 10, 0.1))
                })
                .collect()
        }
    }

    #[test]
    fn report_invariants_hold_for_a_guessing_method() {
        let suite = gen_test_suite(NoiseKind::Normal01, 10, 32, 6).unwrap();
        let (report, rows) = evaluate_method(&HashGuess, &suite).unwrap();
        assert_eq!(rows.len(), 1000);
        assert_eq!(report.failed, 0);
        assert!(report.both_acc <= report.ar_acc.min(report.ma_acc));
        // Random guessing sits near 10%, comfortably inside 4 sigma.
        assert!(
            (report.ar_acc - 10.0).abs() < 4.0,
            "ar_acc {}",
            report.ar_acc
        );
        assert!(
            (report.ma_acc - 10.0).abs() < 4.0,
            "ma_acc {}",
            report.ma_acc
        );
        for (i, row) in report.confusion_ar.iter().enumerate() {
            if !report.empty_rows_ar.contains(&i) {
                assert_abs_diff_eq!(row.iter().sum::<f64>(), 100.0, epsilon = 1e-9);
            }
        }
        // Accuracy equals the label-weighted mean of the confusion diagonal.
        let mut weighted = 0.0;
        for i in 0..10 {
            let n_i = rows.iter().filter(|r| r.p == i).count() as f64;
            weighted += report.confusion_ar[i][i] * n_i;
        }
        assert_abs_diff_eq!(weighted / rows.len() as f64, report.ar_acc, epsilon = 1e-9);
    }

    struct Flaky;

    impl OrderPredictor for Flaky {
        fn name(&self) -> String {
            "flaky".into()
        }
        fn predict_many(&self, series: &[&TimeSeries]) -> Vec<Result<(usize, usize, f64)>> {
            series
                .iter()
                .map(|s| {
                    if s.label.unwrap() == (3, 3) {
                        Err(crate::error::Error::AllFitsFailed)
                    } else {
                        Ok((s.label.unwrap().0, 0, 1.0))
                    }
                })
                .collect()
        }
    }

    #[test]
    fn failures_are_counted_and_excluded_from_both_sides() {
        let suite = gen_test_suite(NoiseKind::Normal01, 3, 32, 11).unwrap();
        let (report, rows) = evaluate_method(&Flaky, &suite).unwrap();
        assert_eq!(report.failed, 3);
        assert_eq!(report.trials, 300 - 3);
        assert_eq!(rows.iter().filter(|r| r.predicted.is_none()).count(), 3);
        // The failed cells never reach the confusion matrix.
        assert!((report.ar_acc - 100.0).abs() < 1e-9);
    }

    #[test]
    fn subset_rejects_an_all_excluded_filter() {
        let rows = vec![SeriesRow {
            series_id: 0,
            p: 0,
            q: 0,
            predicted: Some((0, 0)),
            score: 1.0,
            wall_ms: 0.0,
        }];
        assert!(matches!(chenoweth_subset(&rows), Err(Error::EmptySubset)));
    }

    #[test]
    fn shuffling_the_suite_changes_no_metric() {
        let mut suite = gen_test_suite(NoiseKind::Normal01, 3, 32, 7).unwrap();
        let (before, _) = evaluate_method(&HashGuess, &suite).unwrap();
        suite.series.reverse();
        let (after, _) = evaluate_method(&HashGuess, &suite).unwrap();
        assert_eq!(before.ar_acc, after.ar_acc);
        assert_eq!(before.ma_acc, after.ma_acc);
        assert_eq!(before.ar_mse, after.ar_mse);
        assert_eq!(before.confusion_ar, after.confusion_ar);
    }

    #[test]
    fn subset_counts_and_perfect_accuracy() {
        let suite = gen_test_suite(NoiseKind::Normal01, 4, 32, 8).unwrap();
        // An oracle that reads the label back is perfect on the subset.
        struct Oracle;
        impl OrderPredictor for Oracle {
            fn name(&self) -> String {
                "oracle".into()
            }
            fn predict_many(&self, series: &[&TimeSeries]) -> Vec<Result<(usize, usize, f64)>> {
                series
                    .iter()
                    .map(|s| Ok((s.label.unwrap().0, s.label.unwrap().1, 1.0)))
                    .collect()
            }
        }
        let (_, rows) = evaluate_method(&Oracle, &suite).unwrap();
        let (acc, _, count) = chenoweth_subset(&rows).unwrap();
        assert_eq!(count, 4 * 8);
        assert_eq!(acc, 100.0);
        let (report_fixed, rows_fixed) = evaluate_method(&FixedGuess(1, 1), &suite).unwrap();
        let (acc_fixed, _, _) = chenoweth_subset(&rows_fixed).unwrap();
        // (1,1) is one of the eight subset models.
        assert_abs_diff_eq!(acc_fixed, 100.0 / 8.0, epsilon = 1e-9);
        assert!(report_fixed.both_acc < acc_fixed);
    }
}
