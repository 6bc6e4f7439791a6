use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `counts[t][p]`: rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.classes..][..self.classes]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|k| self.get(k, k)).sum()
    }

    fn predicted(&self, k: usize) -> u64 {
        (0..self.classes).map(|t| self.get(t, k)).sum()
    }

    fn actual(&self, k: usize) -> u64 {
        self.row(k).iter().sum()
    }

    /// `(TP, TN, FP, FN)` treating `positive` as the positive class.
    pub fn one_vs_rest(&self, positive: usize) -> (u64, u64, u64, u64) {
        let tp = self.get(positive, positive);
        let fp = self.predicted(positive) - tp;
        let fn_ = self.actual(positive) - tp;
        let tn = self.total() - tp - fp - fn_;
        (tp, tn, fp, fn_)
    }
}

/// Tallies label/prediction pairs.
pub fn confusion(labels: &[usize], predictions: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::Shape(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (&t, &p) in labels.iter().zip(predictions) {
        if t >= classes || p >= classes {
            return Err(Error::Label(format!("class {} out of range for {classes} classes", t.max(p))));
        }
        cm.counts[t * classes + p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Averaging {
    Binary { positive_class: usize },
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub csi: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub csi: f64,
    pub mcc: f64,
    pub averaging: Averaging,
    pub per_class: Vec<ClassMetrics>,
}

impl MetricsReport {
    /// The six headline metrics in reporting order.
    pub fn rows(&self) -> [(&'static str, f64); 6] {
        [
            ("Accuracy", self.accuracy),
            ("Precision", self.precision),
            ("Recall", self.recall),
            ("F1", self.f1),
            ("CSI", self.csi),
            ("MCC", self.mcc),
        ]
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    ratio(2.0 * p * r, p + r)
}

fn class_metrics(cm: &ConfusionMatrix, k: usize) -> ClassMetrics {
    let (tp, _, fp, fn_) = cm.one_vs_rest(k);
    let (tp, fp, fn_) = (tp as f64, fp as f64, fn_ as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    ClassMetrics {
        class: k,
        precision,
        recall,
        f1: harmonic(precision, recall),
        csi: ratio(tp, tp + fn_ + fp),
        support: cm.actual(k),
    }
}

/// Two-class MCC from the four cells.
pub fn binary_mcc(tp: u64, tn: u64, fp: u64, fn_: u64) -> f64 {
    let (tp, tn, fp, fn_) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    ratio(tp * tn - fp * fn_, libm::sqrt(den))
}

/// Multiclass MCC; equals [`binary_mcc`] for two classes.
pub fn multiclass_mcc(cm: &ConfusionMatrix) -> f64 {
    let s = cm.total() as f64;
    let c = cm.trace() as f64;
    let (mut pt, mut pp, mut tt) = (0.0, 0.0, 0.0);
    for k in 0..cm.classes() {
        let p = cm.predicted(k) as f64;
        let t = cm.actual(k) as f64;
        pt += p * t;
        pp += p * p;
        tt += t * t;
    }
    ratio(c * s - pt, libm::sqrt((s * s - pp) * (s * s - tt)))
}

/// Six-metric report. Two classes use the positive class (default 1);
/// more classes are macro-averaged one-vs-rest.
pub fn metrics(cm: &ConfusionMatrix, positive_class: Option<usize>) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Evaluation("cannot compute metrics of an empty confusion matrix".into()));
    }
    let n = cm.classes();
    if let Some(p) = positive_class {
        if n != 2 {
            return Err(Error::Evaluation(format!(
                "a positive class only applies to two-class problems, this one has {n}"
            )));
        }
        if p >= n {
            return Err(Error::Label(format!("positive class {p} out of range for {n} classes")));
        }
    }
    let per_class: Vec<ClassMetrics> = (0..n).map(|k| class_metrics(cm, k)).collect();
    let accuracy = cm.trace() as f64 / total as f64;
    let report = if n == 2 {
        let positive = positive_class.unwrap_or(1);
        let (tp, tn, fp, fn_) = cm.one_vs_rest(positive);
        let m = &per_class[positive];
        MetricsReport {
            accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            csi: m.csi,
            mcc: binary_mcc(tp, tn, fp, fn_),
            averaging: Averaging::Binary {
                positive_class: positive,
            },
            per_class,
        }
    } else {
        let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n as f64;
        MetricsReport {
            accuracy,
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
            csi: mean(|m| m.csi),
            mcc: multiclass_mcc(cm),
            averaging: Averaging::Macro,
            per_class,
        }
    };
    Ok(report)
}
