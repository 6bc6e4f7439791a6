use std::fs;
use std::path::Path;

use sigcat::cli::run;

/// Tiny network and short signals so the whole pipeline takes seconds.
const SMALL: &str = r#"{
  "schema_version": 1,
  "model": {
    "stem": {"channels": 4},
    "layers": [
      {"out_channels": 8, "num_blocks": 1, "first_stride": 2},
      {"out_channels": 8, "num_blocks": 1, "first_stride": 2}
    ],
    "attention_divisor": 4,
    "hidden": 8
  },
  "augment": {"cutout_length": 4, "shift_amount": 3},
  "preprocess": {"baseline_kernel": 9},
  "train": {"max_epochs": 4, "patience": 2, "batch_size": 16, "ensemble_size": 1}
}"#;

fn sigcat(args: &[&str]) -> i32 {
    run(std::iter::once("sigcat").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn setup(dir: &Path) {
    fs::write(dir.join("c.json"), SMALL).unwrap();
    let code = sigcat(&[
        "synth", "--classes", "2", "--per-class", "20", "--length", "32", "--out",
        p(&dir.join("d")),
    ]);
    assert_eq!(code, 0);
}

#[test]
fn synth_train_evaluate_predict() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    setup(dir);
    for f in ["data.csv", "summary.txt", "config.json"] {
        assert!(dir.join("d").join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(dir.join("d/summary.txt")).unwrap();
    assert!(summary.contains("rows: 40\n") && summary.contains("length: 32\n"));

    let code = sigcat(&[
        "train", "--data", p(&dir.join("d")), "--config", p(&dir.join("c.json")), "--out",
        p(&dir.join("t")), "--batch-size", "8",
    ]);
    assert_eq!(code, 0);
    for f in ["model.ckpt", "train_log.csv", "config.json", "metrics.txt", "metrics.json", "confusion.csv"] {
        assert!(dir.join("t").join(f).exists(), "{f}");
    }
    let echo = sigcat::config::RunConfig::load(&dir.join("t/config.json")).unwrap();
    assert_eq!(echo.train.batch_size, 8);
    assert_eq!(echo.model.stem.channels, 4);
    let log = fs::read_to_string(dir.join("t/train_log.csv")).unwrap();
    assert!(log.starts_with("epoch,train_loss,train_acc,val_loss,val_acc,lr\n"));

    let code = sigcat(&[
        "evaluate", "--checkpoint", p(&dir.join("t/model.ckpt")), "--data", p(&dir.join("d/data.csv")),
        "--out", p(&dir.join("e")),
    ]);
    assert_eq!(code, 0);
    let table = fs::read_to_string(dir.join("e/metrics.txt")).unwrap();
    let order: Vec<&str> = table.lines().skip(1).take(6).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(order, ["Accuracy", "Precision", "Recall", "F1", "CSI", "MCC"]);
    let cm = fs::read_to_string(dir.join("e/confusion.csv")).unwrap();
    let total: u64 = cm
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(1).map(|v| v.parse::<u64>().unwrap()).collect::<Vec<_>>())
        .sum();
    assert_eq!(total, 40);
    assert!(dir.join("e/config.json").exists());

    let code = sigcat(&[
        "predict", "--checkpoint", p(&dir.join("t")), "--data", p(&dir.join("d/data.csv")), "--label-column",
        "none", "--out", p(&dir.join("p")),
    ]);
    assert_eq!(code, 0);
    let preds = fs::read_to_string(dir.join("p/predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 41);
    for line in preds.lines().skip(1) {
        let probs: f64 = line.split(',').skip(4).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((probs - 1.0).abs() < 1e-12);
    }
}

#[test]
fn split_files_feed_training() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    setup(dir);
    let code = sigcat(&["split", "--data", p(&dir.join("d/data.csv")), "--out", p(&dir.join("s"))]);
    assert_eq!(code, 0);
    let summary = fs::read_to_string(dir.join("s/summary.txt")).unwrap();
    assert!(summary.contains("split train: 32\n") && summary.contains("split test: 4\n"), "{summary}");
    let code = sigcat(&[
        "train", "--data", p(&dir.join("s")), "--config", p(&dir.join("c.json")), "--out", p(&dir.join("t")),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("t/metrics.json")).unwrap()).unwrap();
    let n: u64 = report["confusion"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(n, 4);
}

#[test]
fn preprocess_and_augment_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    setup(dir);
    let data_path = dir.join("d/data.csv");
    let data = p(&data_path);
    assert_eq!(sigcat(&["preprocess", "--data", data, "--baseline-kernel", "9", "--out", p(&dir.join("pp"))]), 0);
    let pre = sigcat::csvio::load_csv_dataset(&dir.join("pp/preprocessed.csv"), &Default::default()).unwrap();
    assert_eq!(pre.signal_len(), Some(32));
    assert!(pre.signals().iter().flat_map(|s| s.samples()).all(|v| v.abs() <= 5.0));

    let aug_out = dir.join("aug");
    assert_eq!(sigcat(&["augment", "--data", data, "--cutout-length", "4", "--out", p(&aug_out)]), 0);
    let aug = sigcat::csvio::load_csv_dataset(&aug_out.join("augmented.csv"), &Default::default()).unwrap();
    let raw = sigcat::csvio::load_csv_dataset(&dir.join("d/data.csv"), &Default::default()).unwrap();
    assert_eq!(aug.signal_len(), Some(7 * 32));
    for (a, r) in aug.signals().iter().zip(raw.signals()) {
        assert_eq!(&a.samples()[..32], r.samples());
        assert_eq!(a.label, r.label);
    }
}

#[test]
fn identical_runs_write_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    setup(dir);
    for out in ["a", "b"] {
        let code = sigcat(&[
            "train", "--data", p(&dir.join("d")), "--config", p(&dir.join("c.json")), "--out", p(&dir.join(out)),
            "--ensemble-size", "2",
        ]);
        assert_eq!(code, 0);
    }
    for f in ["model-0.ckpt", "model-1.ckpt", "train_log-0.csv", "metrics.txt", "metrics.json", "config.json"] {
        assert_eq!(fs::read(dir.join("a").join(f)).unwrap(), fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(dir.join("a/model-0.ckpt")).unwrap(), fs::read(dir.join("a/model-1.ckpt")).unwrap());
}

#[test]
fn describe_reports_default_total() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("desc");
    assert_eq!(sigcat(&["describe", "--out", p(&out)]), 0);
    let text = fs::read_to_string(out.join("describe.txt")).unwrap();
    let total = text.lines().last().unwrap();
    assert!(total.starts_with("total") && total.ends_with("6405698"), "{total}");
    assert!(text.contains("[1, 512, 39]"));
    assert!(out.join("config.json").exists());
}

#[test]
fn bench_writes_memory_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench");
    fs::write(tmp.path().join("c.json"), SMALL).unwrap();
    assert_eq!(sigcat(&["bench", "--config", p(&tmp.path().join("c.json")), "--repetitions", "10", "--out", p(&out)]), 0);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("bench.json")).unwrap()).unwrap();
    let latency = r["latency_seconds"].as_f64().unwrap();
    let throughput = r["throughput_per_second"].as_f64().unwrap();
    assert!((latency * throughput - 1.0).abs() < 1e-12);
    assert_eq!(r["memory"]["bytes_per_model"].as_u64().unwrap(), 4 * r["parameters"].as_u64().unwrap());
    assert_eq!(sigcat(&["bench", "--repetitions", "5", "--out", p(&out)]), 2);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    setup(dir);
    let (data_path, out_path) = (dir.join("d"), dir.join("x"));
    let (data, out) = (p(&data_path), p(&out_path));
    assert_eq!(sigcat(&["train", "--data", data, "--bogus", "--out", out]), 2);
    assert_eq!(sigcat(&["frobnicate"]), 2);
    assert_eq!(sigcat(&[]), 2);
    fs::write(dir.join("typo.json"), r#"{"train": {"batch_sise": 4}}"#).unwrap();
    assert_eq!(sigcat(&["train", "--data", data, "--config", p(&dir.join("typo.json")), "--out", out]), 2);
    assert_eq!(sigcat(&["train", "--data", data, "--patience", "500", "--out", out]), 2);

    fs::write(dir.join("ragged.csv"), "1,2,0\n1,2\n").unwrap();
    assert_eq!(sigcat(&["split", "--data", p(&dir.join("ragged.csv")), "--out", out]), 1);
    assert_eq!(sigcat(&["split", "--data", p(&dir.join("missing.csv")), "--out", out]), 1);
    fs::write(dir.join("bad.ckpt"), b"not a checkpoint").unwrap();
    assert_eq!(
        sigcat(&["evaluate", "--checkpoint", p(&dir.join("bad.ckpt")), "--data", data, "--out", out]),
        1
    );
    assert_eq!(sigcat(&["--help"]), 0);
}
