//! Persistent formats: binary checkpoint and suite containers, CSV reports.

pub mod container;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::arma::{NoiseKind, TimeSeries};
use crate::error::{Error, Result};
use crate::eval::{SeriesRow, TestSuite};
use crate::net::{Network, NetworkConfig, Variant};
use crate::train::{Checkpoint, Constraint, OptimizerKind, OrderKind, TrainTrace};
pub use container::{read_container, write_container, Tensor};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ARID";
pub const SUITE_MAGIC: [u8; 4] = *b"ARTS";

/// Serializes a checkpoint: a readable header with the configuration and
/// provenance, then per layer the convolution weights/bias, batch-norm
/// affine pair and running statistics, then the training trace.
pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let cfg = ckpt.config();
    let history = ckpt
        .constraint_history
        .iter()
        .map(Constraint::encode)
        .collect::<Vec<_>>()
        .join("|");
    let header: Vec<(String, String)> = vec![
        ("variant".into(), cfg.variant.tag().into()),
        ("depth".into(), cfg.depth.to_string()),
        ("kw".into(), cfg.kernel_width.to_string()),
        ("features".into(), cfg.features.to_string()),
        ("num_classes".into(), cfg.num_classes.to_string()),
        ("input_length".into(), cfg.input_length.to_string()),
        ("target".into(), ckpt.target.tag().into()),
        ("noise".into(), ckpt.noise.tag().into()),
        ("optimizer".into(), ckpt.optimizer.tag()),
        ("seed".into(), ckpt.seed.to_string()),
        ("constraint_history".into(), history),
        ("mean_error".into(), ckpt.trace.final_mean_error.to_string()),
        ("total_batches".into(), ckpt.trace.total_batches.to_string()),
        ("wall_seconds".into(), ckpt.trace.wall_seconds.to_string()),
    ];

    let mut tensors = Vec::new();
    for layer in ckpt.network.layers() {
        let c = &layer.conv;
        tensors.push(Tensor {
            dims: vec![c.out_ch as u64, c.in_ch as u64, c.kw as u64],
            data: c.w.clone(),
        });
        tensors.push(Tensor::vector(c.b.clone()));
        tensors.push(Tensor::vector(layer.bn.gamma.clone()));
        tensors.push(Tensor::vector(layer.bn.beta.clone()));
        tensors.push(Tensor::vector(layer.bn.running_mean.clone()));
        tensors.push(Tensor::vector(layer.bn.running_var.clone()));
    }
    tensors.push(Tensor::vector(ckpt.trace.window_means.clone()));
    tensors.push(Tensor::vector(ckpt.trace.window_lrs.clone()));
    tensors.push(Tensor::vector(ckpt.trace.window_wall.clone()));

    write_container(path, CHECKPOINT_MAGIC, &header, &tensors)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let (header, tensors) = read_container(path, CHECKPOINT_MAGIC)?;
    let h = |k: &str| container::header_get(&header, k);
    let cfg = NetworkConfig::new(
        Variant::from_tag(h("variant")?)?,
        container::header_parse(&header, "depth")?,
        container::header_parse(&header, "kw")?,
        container::header_parse(&header, "features")?,
        container::header_parse(&header, "num_classes")?,
        container::header_parse(&header, "input_length")?,
    )?;
    let mut network = Network::empty(cfg)?;

    let expected = network.layers().len() * 6 + 3;
    if tensors.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "checkpoint holds {} tensors, expected {expected}",
            tensors.len()
        )));
    }
    let mut it = tensors.into_iter();
    let mut take = |what: &str, dims: Vec<u64>| -> Result<Vec<f64>> {
        let t = it.next().expect("tensor count checked");
        if t.dims != dims {
            return Err(Error::ShapeMismatch(format!(
                "{what}: stored dims {:?}, expected {:?}",
                t.dims, dims
            )));
        }
        Ok(t.data)
    };
    for (li, layer) in network.layers_mut().iter_mut().enumerate() {
        let (oc, ic, kw) = (layer.conv.out_ch, layer.conv.in_ch, layer.conv.kw);
        layer.conv.w = take(
            &format!("layer {li} weights"),
            vec![oc as u64, ic as u64, kw as u64],
        )?;
        layer.conv.b = take(&format!("layer {li} bias"), vec![oc as u64])?;
        layer.bn.gamma = take(&format!("layer {li} gamma"), vec![oc as u64])?;
        layer.bn.beta = take(&format!("layer {li} beta"), vec![oc as u64])?;
        layer.bn.running_mean = take(&format!("layer {li} running mean"), vec![oc as u64])?;
        layer.bn.running_var = take(&format!("layer {li} running var"), vec![oc as u64])?;
    }
    let window_means = it.next().expect("trace tensor").data;
    let window_lrs = it.next().expect("trace tensor").data;
    let window_wall = it.next().expect("trace tensor").data;

    let history_text = h("constraint_history")?;
    let constraint_history = if history_text.is_empty() {
        Vec::new()
    } else {
        history_text
            .split('|')
            .map(Constraint::decode)
            .collect::<Result<_>>()?
    };

    Ok(Checkpoint {
        network,
        target: OrderKind::from_tag(h("target")?)?,
        noise: NoiseKind::from_tag(h("noise")?)?,
        optimizer: OptimizerKind::from_tag(h("optimizer")?)?,
        constraint_history,
        trace: TrainTrace {
            window_means,
            window_lrs,
            window_wall,
            total_batches: container::header_parse(&header, "total_batches")?,
            wall_seconds: container::header_parse(&header, "wall_seconds")?,
            final_mean_error: container::header_parse(&header, "mean_error")?,
        },
        seed: container::header_parse(&header, "seed")?,
    })
}

/// Serializes a suite: labels as a count x 2 matrix, values as count x len.
pub fn save_suite(suite: &TestSuite, path: &Path) -> Result<()> {
    let count = suite.series.len();
    let header: Vec<(String, String)> = vec![
        ("noise".into(), suite.noise.tag().into()),
        ("batches".into(), suite.batches.to_string()),
        ("length".into(), suite.length.to_string()),
        ("seed".into(), suite.seed.to_string()),
        ("count".into(), count.to_string()),
    ];
    let mut labels = Vec::with_capacity(count * 2);
    let mut values = Vec::with_capacity(count * suite.length);
    for s in &suite.series {
        let (p, q) = s
            .label
            .ok_or_else(|| Error::InvalidArgument("suite series must be labeled".into()))?;
        labels.push(p as f64);
        labels.push(q as f64);
        if s.len() != suite.length {
            return Err(Error::InputLengthMismatch {
                got: s.len(),
                expected: suite.length,
            });
        }
        values.extend_from_slice(&s.values);
    }
    let tensors = vec![
        Tensor::matrix(count, 2, labels),
        Tensor::matrix(count, suite.length, values),
    ];
    write_container(path, SUITE_MAGIC, &header, &tensors)
}

pub fn load_suite(path: &Path) -> Result<TestSuite> {
    let (header, tensors) = read_container(path, SUITE_MAGIC)?;
    let count: usize = container::header_parse(&header, "count")?;
    let length: usize = container::header_parse(&header, "length")?;
    if tensors.len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "suite holds {} tensors",
            tensors.len()
        )));
    }
    let labels = &tensors[0];
    let values = &tensors[1];
    if labels.dims != vec![count as u64, 2] || values.dims != vec![count as u64, length as u64] {
        return Err(Error::ShapeMismatch(
            "suite tensor dims disagree with header".into(),
        ));
    }
    let mut series = Vec::with_capacity(count);
    for i in 0..count {
        let p = labels.data[i * 2] as usize;
        let q = labels.data[i * 2 + 1] as usize;
        series.push(TimeSeries {
            values: values.data[i * length..(i + 1) * length].to_vec(),
            label: Some((p, q)),
        });
    }
    Ok(TestSuite {
        series,
        noise: NoiseKind::from_tag(container::header_get(&header, "noise")?)?,
        batches: container::header_parse(&header, "batches")?,
        length,
        seed: container::header_parse(&header, "seed")?,
    })
}

/// Per-series CSV: `series_id,p,q,p_hat,q_hat,criterion_or_prob,wall_ms`.
/// Failed predictions carry the literal `failed` in the order columns.
pub fn write_series_rows(rows: &[SeriesRow], path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "series_id,p,q,p_hat,q_hat,criterion_or_prob,wall_ms")?;
    for r in rows {
        match r.predicted {
            Some((ph, qh)) => writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.series_id, r.p, r.q, ph, qh, r.score, r.wall_ms
            )?,
            None => writeln!(
                out,
                "{},{},{},failed,failed,,{}",
                r.series_id, r.p, r.q, r.wall_ms
            )?,
        }
    }
    Ok(())
}

pub fn read_series_rows(path: &Path) -> Result<Vec<SeriesRow>> {
    let file = std::fs::File::open(path)?;
    let mut rows = Vec::new();
    for (ln, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if ln == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::HeaderParse(format!("csv line {}", ln + 1)));
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::HeaderParse(format!("csv line {}", ln + 1)))
        };
        let predicted = if fields[3] == "failed" {
            None
        } else {
            Some((parse(fields[3])?, parse(fields[4])?))
        };
        rows.push(SeriesRow {
            series_id: parse(fields[0])?,
            p: parse(fields[1])?,
            q: parse(fields[2])?,
            predicted,
            score: fields[5].parse().unwrap_or(f64::NAN),
            wall_ms: fields[6].parse().unwrap_or(f64::NAN),
        });
    }
    Ok(rows)
}

/// Per-window trace CSV: `window_index,mean_error,lr,wall_seconds`.
pub fn write_trace_csv(trace: &TrainTrace, path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "window_index,mean_error,lr,wall_seconds")?;
    for (i, ((m, lr), w)) in trace
        .window_means
        .iter()
        .zip(&trace.window_lrs)
        .zip(&trace.window_wall)
        .enumerate()
    {
        writeln!(out, "{i},{m},{lr},{w}")?;
    }
    Ok(())
}

/// Report CSV: one `metric,value` row per headline figure.
pub fn write_report_csv(report: &crate::eval::EvalReport, path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "metric,value")?;
    writeln!(out, "method,{}", report.method)?;
    writeln!(out, "trials,{}", report.trials)?;
    writeln!(out, "failed,{}", report.failed)?;
    writeln!(out, "ar_acc,{}", report.ar_acc)?;
    writeln!(out, "ar_ci_lo,{}", report.ar_ci.0)?;
    writeln!(out, "ar_ci_hi,{}", report.ar_ci.1)?;
    writeln!(out, "ar_mse,{}", report.ar_mse)?;
    writeln!(out, "ma_acc,{}", report.ma_acc)?;
    writeln!(out, "ma_ci_lo,{}", report.ma_ci.0)?;
    writeln!(out, "ma_ci_hi,{}", report.ma_ci.1)?;
    writeln!(out, "ma_mse,{}", report.ma_mse)?;
    writeln!(out, "both_acc,{}", report.both_acc)?;
    writeln!(out, "both_ci_lo,{}", report.both_ci.0)?;
    writeln!(out, "both_ci_hi,{}", report.both_ci.1)?;
    writeln!(out, "wall_hours,{}", report.wall_hours)?;
    writeln!(out, "cpu_hours,{}", report.cpu_hours)?;
    for (tag, m) in [("ar", &report.confusion_ar), ("ma", &report.confusion_ma)] {
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                writeln!(out, "confusion_{tag}_{i}_{j},{v}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Variant;
    use crate::train::{train, TrainOptions};
    use tempfile::tempdir;

    fn small_checkpoint(seed: u64) -> Checkpoint {
        let cfg = NetworkConfig::new(Variant::FullPreActivation, 4, 3, 3, 2, 32).unwrap();
        let mut opts =
            TrainOptions::new(NoiseKind::Normal01, OptimizerKind::default_adam(), seed, 32);
        opts.opposite_range = vec![0];
        opts.window_batches = 2;
        opts.initial_lr = 1.5625e-4; // one window per run keeps the test quick
        opts.deterministic = true;
        train(cfg, OrderKind::Ma, &opts).unwrap()
    }

    #[test]
    fn checkpoint_save_load_save_is_byte_identical() {
        let dir = tempdir().unwrap();
        let ckpt = small_checkpoint(42);
        let p1 = dir.path().join("a.arid");
        let p2 = dir.path().join("b.arid");
        save_checkpoint(&ckpt, &p1).unwrap();
        let loaded = load_checkpoint(&p1).unwrap();
        save_checkpoint(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(
            loaded.network.flatten_params(),
            ckpt.network.flatten_params()
        );
        assert_eq!(loaded.trace.window_means, ckpt.trace.window_means);
        assert_eq!(loaded.constraint_history, ckpt.constraint_history);
        assert_eq!(loaded.target, ckpt.target);
        assert_eq!(loaded.optimizer, ckpt.optimizer);
    }

    #[test]
    fn truncated_checkpoint_is_rejected_whole() {
        let dir = tempdir().unwrap();
        let ckpt = small_checkpoint(43);
        let path = dir.path().join("c.arid");
        save_checkpoint(&ckpt, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() / 2);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn corrupted_header_names_the_key() {
        let dir = tempdir().unwrap();
        let ckpt = small_checkpoint(44);
        let path = dir.path().join("d.arid");
        save_checkpoint(&ckpt, &path).unwrap();
        let (mut header, tensors) = read_container(&path, CHECKPOINT_MAGIC).unwrap();
        for (k, v) in header.iter_mut() {
            if k == "depth" {
                *v = "zebra".into();
            }
        }
        write_container(&path, CHECKPOINT_MAGIC, &header, &tensors).unwrap();
        match load_checkpoint(&path) {
            Err(Error::HeaderParse(msg)) => assert!(msg.contains("depth"), "{msg}"),
            other => panic!("expected header parse error, got {other:?}"),
        }
    }

    #[test]
    fn suite_round_trips_losslessly() {
        let dir = tempdir().unwrap();
        let suite = crate::eval::gen_test_suite(NoiseKind::StudentT2, 1, 48, 7).unwrap();
        let p1 = dir.path().join("s.arts");
        save_suite(&suite, &p1).unwrap();
        let loaded = load_suite(&p1).unwrap();
        assert_eq!(loaded.series.len(), suite.series.len());
        for (a, b) in suite.series.iter().zip(&loaded.series) {
            assert_eq!(a.values, b.values);
            assert_eq!(a.label, b.label);
        }
        assert_eq!(loaded.noise, suite.noise);
        assert_eq!(loaded.seed, suite.seed);
        // Identical generation writes identical bytes.
        let p2 = dir.path().join("s2.arts");
        save_suite(
            &crate::eval::gen_test_suite(NoiseKind::StudentT2, 1, 48, 7).unwrap(),
            &p2,
        )
        .unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn loading_a_checkpoint_as_a_suite_reports_bad_magic() {
        let dir = tempdir().unwrap();
        let ckpt = small_checkpoint(45);
        let path = dir.path().join("e.arid");
        save_checkpoint(&ckpt, &path).unwrap();
        assert!(matches!(load_suite(&path), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn series_rows_round_trip_including_failures() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = vec![
            SeriesRow {
                series_id: 0,
                p: 1,
                q: 2,
                predicted: Some((1, 3)),
                score: 0.25,
                wall_ms: 1.5,
            },
            SeriesRow {
                series_id: 1,
                p: 0,
                q: 0,
                predicted: None,
                score: f64::NAN,
                wall_ms: 2.0,
            },
        ];
        write_series_rows(&rows, &path).unwrap();
        let back = read_series_rows(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].predicted, Some((1, 3)));
        assert_eq!(back[0].score, 0.25);
        assert_eq!(back[1].predicted, None);
    }

    #[test]
    fn suite_file_size_is_dominated_by_eight_bytes_per_value() {
        let dir = tempdir().unwrap();
        let suite = crate::eval::gen_test_suite(NoiseKind::Normal01, 1, 200, 8).unwrap();
        let path = dir.path().join("size.arts");
        save_suite(&suite, &path).unwrap();
        let bytes = std::fs::metadata(&path).unwrap().len();
        let payload = (100 * 200 + 100 * 2) as u64 * 8;
        assert!(
            bytes > payload && bytes < payload + 512,
            "{bytes} vs {payload}"
        );
    }

    #[test]
    fn deterministic_training_gives_byte_identical_checkpoints() {
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("r1.arid");
        let p2 = dir.path().join("r2.arid");
        save_checkpoint(&small_checkpoint(46), &p1).unwrap();
        save_checkpoint(&small_checkpoint(46), &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}
