//! Signals, datasets, splitting and synthetic data.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

/// A fixed-length real-valued sample with an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    pub label: Option<usize>,
    pub source_id: Option<String>,
}

impl Signal {
    pub fn new(samples: Vec<f64>, label: Option<usize>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Signal("signal has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Signal(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            label,
            source_id: None,
        })
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = Some(id.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same label and id, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        let mut s = Signal::new(samples, self.label)?;
        s.source_id = self.source_id.clone();
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            val_fraction: 0.1,
            test_fraction: 0.1,
            seed: 42,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = self.fractions();
        if f.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::Config(format!(
                "split fractions must lie in (0, 1), got {f:?}"
            )));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    fn fractions(&self) -> [f64; 3] {
        [self.train_fraction, self.val_fraction, self.test_fraction]
    }
}

/// Splits `n` items across the three fractions with largest-remainder
/// rounding; ties go to the earlier split.
pub fn apportion(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let exact = fractions.map(|f| f * n as f64);
    let mut counts = exact.map(|x| libm::floor(x) as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a] as f64;
        let rb = exact[b] - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    signals: Vec<Signal>,
    num_classes: usize,
    class_names: Vec<String>,
    splits: Option<Vec<Split>>,
}

impl Dataset {
    /// Builds a dataset, checking the shared-length and label invariants.
    pub fn new(signals: Vec<Signal>, num_classes: usize, class_names: Vec<String>) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        if class_names.len() != num_classes {
            return Err(Error::Config(format!(
                "{} class names for {num_classes} classes",
                class_names.len()
            )));
        }
        if let Some(first) = signals.first() {
            let n = first.len();
            if let Some(i) = signals.iter().position(|s| s.len() != n) {
                return Err(Error::Signal(format!(
                    "signal {i} has length {}, expected {n}",
                    signals[i].len()
                )));
            }
        }
        if let Some(i) = signals
            .iter()
            .position(|s| s.label.is_some_and(|l| l >= num_classes))
        {
            return Err(Error::Label(format!(
                "signal {i} has label {} but there are {num_classes} classes",
                signals[i].label.unwrap_or_default()
            )));
        }
        Ok(Self {
            signals,
            num_classes,
            class_names,
            splits: None,
        })
    }

    /// Infers the class count from the labels, which must cover `0..C`.
    pub fn from_labeled(signals: Vec<Signal>) -> Result<Self> {
        let distinct: BTreeMap<usize, ()> = signals.iter().filter_map(|s| s.label).map(|l| (l, ())).collect();
        let num_classes = distinct.len().max(1);
        if let Some((&max, _)) = distinct.last_key_value() {
            if max >= num_classes {
                return Err(Error::Mapping(format!(
                    "labels must be contiguous from 0; found {} distinct labels with maximum {max} (supply a label map)",
                    distinct.len()
                )));
            }
        }
        let names = (0..num_classes).map(|c| c.to_string()).collect();
        Self::new(signals, num_classes, names)
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn set_class_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.num_classes {
            return Err(Error::Config(format!(
                "{} class names for {} classes",
                names.len(),
                self.num_classes
            )));
        }
        self.class_names = names;
        Ok(())
    }

    /// Common signal length, `None` for an empty dataset.
    pub fn signal_len(&self) -> Option<usize> {
        self.signals.first().map(Signal::len)
    }

    pub fn splits(&self) -> Option<&[Split]> {
        self.splits.as_deref()
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_classes];
        for l in self.signals.iter().filter_map(|s| s.label) {
            h[l] += 1;
        }
        h
    }

    /// Indices of signals assigned to `split`; empty when unsplit.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        match &self.splits {
            Some(s) => (0..s.len()).filter(|&i| s[i] == split).collect(),
            None => Vec::new(),
        }
    }

    pub fn split_signals(&self, split: Split) -> Vec<&Signal> {
        self.split_indices(split).into_iter().map(|i| &self.signals[i]).collect()
    }

    /// Assigns every signal to a split. Rejects assignments that leave a
    /// split empty.
    pub fn assign_splits(&mut self, splits: Vec<Split>) -> Result<()> {
        if splits.len() != self.signals.len() {
            return Err(Error::Config(format!(
                "{} split assignments for {} signals",
                splits.len(),
                self.signals.len()
            )));
        }
        for s in Split::ALL {
            if !splits.contains(&s) {
                return Err(Error::Stratification(format!("{} split is empty", s.name())));
            }
        }
        self.splits = Some(splits);
        Ok(())
    }

    /// A new dataset holding only the signals of one split.
    pub fn subset(&self, split: Split) -> Result<Dataset> {
        let signals = self.split_signals(split).into_iter().cloned().collect();
        Dataset::new(signals, self.num_classes, self.class_names.clone())
    }
}

/// Relabels signals through `map`; every label must have an entry.
pub fn apply_label_map(signals: &mut [Signal], map: &BTreeMap<i64, usize>, raw: &[i64]) -> Result<()> {
    for (i, (s, r)) in signals.iter_mut().zip(raw).enumerate() {
        let mapped = map
            .get(r)
            .ok_or_else(|| Error::Mapping(format!("row {}: label {r} has no entry in the label map", i + 1)))?;
        s.label = Some(*mapped);
    }
    Ok(())
}

/// The binary seizure framing of the five-class UCI EEG labels:
/// raw 1 is seizure (class 1), raw 2..=5 are non-seizure (class 0).
pub fn uci_seizure_map() -> BTreeMap<i64, usize> {
    [(1, 1), (2, 0), (3, 0), (4, 0), (5, 0)].into_iter().collect()
}

/// Seeded train/val/test assignment, optionally stratified by class.
pub fn stratified_split(dataset: &Dataset, spec: &SplitSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = dataset.len();
    let fractions = spec.fractions();
    let mut assignment = vec![Split::Train; n];
    let groups: Vec<Vec<usize>> = if spec.stratified {
        if let Some(i) = dataset.signals.iter().position(|s| s.label.is_none()) {
            return Err(Error::Stratification(format!("signal {i} is unlabeled")));
        }
        let mut groups = vec![Vec::new(); dataset.num_classes];
        for (i, s) in dataset.signals.iter().enumerate() {
            groups[s.label.unwrap_or_default()].push(i);
        }
        for (c, g) in groups.iter().enumerate() {
            if !g.is_empty() && g.len() < Split::ALL.len() {
                return Err(Error::Stratification(format!(
                    "class {c} has {} members, fewer than the {} splits",
                    g.len(),
                    Split::ALL.len()
                )));
            }
        }
        groups
    } else {
        vec![(0..n).collect()]
    };
    for (g, members) in groups.into_iter().enumerate() {
        let mut members = members;
        let mut rng = seed::rng(spec.seed, &[g as u64]);
        members.shuffle(&mut rng);
        let counts = apportion(members.len(), fractions);
        let mut it = members.into_iter();
        for (split, count) in Split::ALL.into_iter().zip(counts) {
            for i in it.by_ref().take(count) {
                assignment[i] = split;
            }
        }
    }
    let mut out = dataset.clone();
    out.assign_splits(assignment)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_per_class: usize,
    pub length: usize,
    /// Cycles per signal for each class.
    pub class_freqs: Vec<f64>,
    pub noise_std: f64,
    pub seed: u64,
}

/// Class `k` signals are `sin(2π f_k n / N)` plus Gaussian noise.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    if spec.num_per_class == 0 {
        return Err(Error::Config("num_per_class must be positive".into()));
    }
    if spec.length < 16 {
        return Err(Error::Config(format!("length must be at least 16, got {}", spec.length)));
    }
    if spec.class_freqs.is_empty() || spec.class_freqs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::Config("class frequencies must be positive".into()));
    }
    for (i, a) in spec.class_freqs.iter().enumerate() {
        if spec.class_freqs[..i].contains(a) {
            return Err(Error::Config(format!("duplicate class frequency {a}")));
        }
    }
    let noise = Normal::new(0.0, spec.noise_std)
        .map_err(|_| Error::Config(format!("invalid noise std {}", spec.noise_std)))?;
    let n = spec.length as f64;
    let mut signals = Vec::with_capacity(spec.num_per_class * spec.class_freqs.len());
    for (class, &freq) in spec.class_freqs.iter().enumerate() {
        for k in 0..spec.num_per_class {
            let mut rng = seed::rng(spec.seed, &[class as u64, k as u64]);
            let samples = (0..spec.length)
                .map(|i| libm::sin(2.0 * core::f64::consts::PI * freq * i as f64 / n) + noise.sample(&mut rng))
                .collect();
            signals.push(Signal::new(samples, Some(class))?.with_source_id(format!("synth-{class}-{k}")));
        }
    }
    let names = (0..spec.class_freqs.len()).map(|c| c.to_string()).collect();
    Dataset::new(signals, spec.class_freqs.len(), names)
}
