//! Text, CSV and JSON renderings of metrics, confusion matrices and
//! training logs.

use std::fmt::Write as _;

use serde::Serialize;
use sigcat_core::train::{Averaging, ConfusionMatrix, MetricsReport, TrainLog};

fn averaging_label(a: Averaging, class_names: &[String]) -> String {
    match a {
        Averaging::Binary { positive_class } => match class_names.get(positive_class) {
            Some(name) if *name != positive_class.to_string() => {
                format!("binary, positive class {positive_class} ({name})")
            }
            _ => format!("binary, positive class {positive_class}"),
        },
        Averaging::Macro => "macro over one-vs-rest classes".into(),
    }
}

/// Aligned six-row table followed by the averaging used and a per-class
/// breakdown.
pub fn metrics_table(report: &MetricsReport, class_names: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:>8}", "Metric", "Value");
    for (name, v) in report.rows() {
        let _ = writeln!(out, "{name:<10} {v:>8.4}");
    }
    let _ = writeln!(out, "averaging: {}", averaging_label(report.averaging, class_names));
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<16} {:>9} {:>9} {:>9} {:>9} {:>8}",
        "class", "precision", "recall", "f1", "csi", "support"
    );
    for c in &report.per_class {
        let name = class_names.get(c.class).cloned().unwrap_or_else(|| c.class.to_string());
        let _ = writeln!(
            out,
            "{:<16} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            name, c.precision, c.recall, c.f1, c.csi, c.support
        );
    }
    out
}

#[derive(Serialize)]
struct MetricsDoc<'a> {
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    csi: f64,
    mcc: f64,
    averaging: Averaging,
    class_names: &'a [String],
    per_class: &'a [sigcat_core::train::ClassMetrics],
    confusion: Vec<&'a [u64]>,
}

/// Machine-readable report with full-precision values.
pub fn metrics_json(report: &MetricsReport, cm: &ConfusionMatrix, class_names: &[String]) -> String {
    let doc = MetricsDoc {
        accuracy: report.accuracy,
        precision: report.precision,
        recall: report.recall,
        f1: report.f1,
        csi: report.csi,
        mcc: report.mcc,
        averaging: report.averaging,
        class_names,
        per_class: &report.per_class,
        confusion: (0..cm.classes()).map(|t| cm.row(t)).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

/// Rows are true classes, columns predicted classes.
pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut out = String::from("true\\predicted");
    for p in 0..cm.classes() {
        let _ = write!(out, ",{p}");
    }
    out.push('\n');
    for t in 0..cm.classes() {
        let _ = write!(out, "{t}");
        for v in cm.row(t) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn train_log_csv(log: &TrainLog) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc,lr\n");
    for r in &log.epochs {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?}",
            r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc, r.learning_rate
        );
    }
    out
}
