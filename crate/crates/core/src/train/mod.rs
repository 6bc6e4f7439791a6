//! Training loop, evaluation, ensembling and the analytic memory estimate.

mod metrics;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use metrics::{
    binary_mcc, confusion, metrics, multiclass_mcc, Averaging, ClassMetrics, ConfusionMatrix, MetricsReport,
};

use crate::augment::{self, AugmentConfig};
use crate::model::{build_model, param_count, ModelConfig, ModelParams};
use crate::preprocess::{preprocess_samples, PreprocessConfig};
use crate::seed;
use crate::signal::{Dataset, Signal, Split};
use crate::tensor::{focal_loss, kernels, AdamW, Graph, LossConfig, Mode, OptimizerConfig, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateauConfig {
    pub factor: f64,
    /// Non-improving epochs before the learning rate is reduced.
    pub patience: usize,
    pub min_lr: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 5,
            min_lr: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    /// Fresh variants every epoch.
    #[default]
    PerEpoch,
    /// The same variants every epoch.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleRule {
    #[default]
    MeanProbability,
    MajorityVote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a new best validation accuracy before stopping.
    pub patience: usize,
    pub lr_schedule: PlateauConfig,
    pub seed: u64,
    pub loss: LossConfig,
    pub optimizer: OptimizerConfig,
    pub ensemble_size: usize,
    pub augment_mode: AugmentMode,
    pub ensemble_rule: EnsembleRule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            max_epochs: 100,
            patience: 20,
            lr_schedule: PlateauConfig::default(),
            seed: 42,
            loss: LossConfig::default(),
            optimizer: OptimizerConfig::default(),
            ensemble_size: 5,
            augment_mode: AugmentMode::PerEpoch,
            ensemble_rule: EnsembleRule::MeanProbability,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 || self.ensemble_size == 0 {
            return bad("batch_size, max_epochs, patience and ensemble_size must be positive".into());
        }
        if self.patience >= self.max_epochs {
            return bad(format!(
                "patience {} must be smaller than max_epochs {}",
                self.patience, self.max_epochs
            ));
        }
        let s = &self.lr_schedule;
        if !(s.factor > 0.0 && s.factor < 1.0) || s.patience == 0 || !(s.min_lr >= 0.0) {
            return bad("lr_schedule needs factor in (0, 1), positive patience and min_lr >= 0".into());
        }
        self.loss.validate()?;
        self.optimizer.validate()
    }
}

/// Everything that determines a training run besides the data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub augment: AugmentConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl PipelineConfig {
    pub fn validate(&self, signal_len: usize) -> Result<()> {
        self.preprocess.validate()?;
        self.augment.validate(signal_len)?;
        self.model.validate()?;
        self.train.validate()?;
        self.model.stage_lengths(augment::NUM_VARIANTS * signal_len).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    /// Learning rate used during this epoch.
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainLog {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|r| r.epoch == self.best_epoch)
    }
}

/// Best-validation checkpoint and the log of the run that produced it.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelParams,
    pub log: TrainLog,
}

/// Preprocesses each signal and builds its concatenated network input.
/// Signals without a source id are keyed by their position in `signals`.
pub fn prepare_inputs(signals: &[&Signal], pre: &PreprocessConfig, aug: &AugmentConfig) -> Result<Vec<Vec<f64>>> {
    signals
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let clean = preprocess_samples(s.samples(), pre)?;
            augment::build_concatenated_keyed(&clean, aug, augment::sample_key(s.source_id.as_deref(), i))
        })
        .collect()
}

fn batch_tensor(inputs: &[&[f64]]) -> Result<Tensor> {
    let len = inputs.first().map_or(0, |x| x.len());
    let mut data = Vec::with_capacity(inputs.len() * len);
    for x in inputs {
        if x.len() != len {
            return Err(Error::Shape(format!("inputs of lengths {len} and {} in one batch", x.len())));
        }
        data.extend_from_slice(x);
    }
    Tensor::new([inputs.len(), 1, len], data)
}

fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

/// Eval-mode logits for many inputs, `batch` at a time.
pub fn infer_logits(model: &ModelParams, inputs: &[Vec<f64>], batch: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch.max(1)) {
        let refs: Vec<&[f64]> = chunk.iter().map(|v| v.as_slice()).collect();
        let logits = model.infer(&batch_tensor(&refs)?)?;
        let c = logits.shape()[1];
        out.extend(logits.data().chunks_exact(c).map(|r| r.to_vec()));
    }
    Ok(out)
}

fn labels_of(signals: &[&Signal], what: &str) -> Result<Vec<usize>> {
    signals
        .iter()
        .map(|s| s.label.ok_or_else(|| Error::TrainingSetup(format!("unlabeled signal in the {what} split"))))
        .collect()
}

fn check_setup(dataset: &Dataset, cfg: &PipelineConfig) -> Result<()> {
    let len = dataset
        .signal_len()
        .ok_or_else(|| Error::TrainingSetup("dataset is empty".into()))?;
    cfg.validate(len)?;
    if dataset.splits().is_none() {
        return Err(Error::TrainingSetup("dataset has no train/val/test assignment".into()));
    }
    if cfg.model.num_classes != dataset.num_classes() {
        return Err(Error::TrainingSetup(format!(
            "model has {} classes but the dataset has {}",
            cfg.model.num_classes,
            dataset.num_classes()
        )));
    }
    let mut present = vec![false; dataset.num_classes()];
    for s in dataset.split_signals(Split::Train) {
        if let Some(l) = s.label {
            present[l] = true;
        }
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(Error::TrainingSetup(format!("class {missing} is missing from the train split")));
    }
    if dataset.split_indices(Split::Val).is_empty() {
        return Err(Error::TrainingSetup("validation split is empty".into()));
    }
    Ok(())
}

/// Trains one model and returns the checkpoint with the best validation
/// accuracy (earliest on ties). `on_epoch` sees each record as it is made.
pub fn train(
    dataset: &Dataset,
    cfg: &PipelineConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    check_setup(dataset, cfg)?;
    let tc = &cfg.train;
    let train_signals = dataset.split_signals(Split::Train);
    let val_signals = dataset.split_signals(Split::Val);
    let train_labels = labels_of(&train_signals, "train")?;
    let val_labels = labels_of(&val_signals, "validation")?;
    let clean: Vec<Vec<f64>> = train_signals
        .iter()
        .map(|s| preprocess_samples(s.samples(), &cfg.preprocess))
        .collect::<Result<_>>()?;
    let keys: Vec<u64> = train_signals
        .iter()
        .enumerate()
        .map(|(i, s)| augment::sample_key(s.source_id.as_deref(), i))
        .collect();
    let val_inputs = prepare_inputs(&val_signals, &cfg.preprocess, &cfg.augment)?;

    let mut model = build_model(&cfg.model, tc.seed)?;
    let mut opt = AdamW::new(tc.optimizer)?;
    let mut best_model = model.clone();
    let mut log = TrainLog {
        epochs: Vec::new(),
        best_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
    };
    let mut best_acc = f64::NEG_INFINITY;
    let mut plateau_best = f64::NEG_INFINITY;
    let mut plateau_bad = 0;
    let mut order: Vec<usize> = (0..train_signals.len()).collect();

    for epoch in 1..=tc.max_epochs {
        let aug = match tc.augment_mode {
            AugmentMode::PerEpoch => cfg.augment.for_epoch(epoch),
            AugmentMode::Frozen => cfg.augment.clone(),
        };
        order.shuffle(&mut seed::rng(tc.seed, &[0x5EED, epoch as u64]));
        let lr = opt.learning_rate();
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (bi, idx) in order.chunks(tc.batch_size).enumerate() {
            let inputs: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| augment::build_concatenated_keyed(&clean[i], &aug, keys[i]))
                .collect::<Result<_>>()?;
            let refs: Vec<&[f64]> = inputs.iter().map(|v| v.as_slice()).collect();
            let targets: Vec<usize> = idx.iter().map(|&i| train_labels[i]).collect();
            let diverged = || Error::Divergence { epoch, batch: bi + 1 };
            let mut dropout_rng = seed::rng(tc.seed, &[0xD409, epoch as u64, bi as u64]);

            model.zero_grad();
            let mut g = Graph::new();
            let x = g.constant(batch_tensor(&refs)?);
            let logits = model.forward(&mut g, x, Mode::Train, &mut dropout_rng)?;
            let c = g.shape(logits)[1];
            correct += g
                .value(logits)
                .data()
                .chunks_exact(c)
                .zip(&targets)
                .filter(|(row, &t)| argmax(row) == t)
                .count();
            let loss = g.focal_loss(logits, &targets, &tc.loss)?;
            let value = g.value(loss).data()[0];
            if !value.is_finite() {
                return Err(diverged());
            }
            loss_sum += value * idx.len() as f64;
            g.backward(loss).map_err(|e| match e {
                Error::NonFinite(_) => diverged(),
                other => other,
            })?;
            opt.step(&mut model.parameters_mut()).map_err(|e| match e {
                Error::NonFinite(_) => diverged(),
                other => other,
            })?;
        }

        let logits = infer_logits(&model, &val_inputs, tc.batch_size)?;
        let val_correct = logits.iter().zip(&val_labels).filter(|(row, &t)| argmax(row) == t).count();
        let flat: Vec<f64> = logits.concat();
        let val_loss = focal_loss(&Tensor::new([logits.len(), dataset.num_classes()], flat)?, &val_labels, &tc.loss)?.loss;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            train_acc: correct as f64 / order.len() as f64,
            val_loss,
            val_acc: val_correct as f64 / val_labels.len() as f64,
            learning_rate: lr,
        };
        on_epoch(&record);
        let val_acc = record.val_acc;
        log.epochs.push(record);

        if val_acc > best_acc {
            best_acc = val_acc;
            log.best_epoch = epoch;
            best_model = model.clone();
        }
        if val_acc > plateau_best {
            plateau_best = val_acc;
            plateau_bad = 0;
        } else {
            plateau_bad += 1;
            if plateau_bad >= tc.lr_schedule.patience {
                let reduced = (lr * tc.lr_schedule.factor).max(tc.lr_schedule.min_lr);
                if reduced < lr {
                    opt.set_learning_rate(reduced);
                }
                plateau_bad = 0;
            }
        }
        if epoch - log.best_epoch >= tc.patience {
            log.stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    best_model.zero_grad();
    Ok(TrainOutcome { model: best_model, log })
}

/// Trains `ensemble_size` members with seeds `seed, seed + 1, ...`.
pub fn train_ensemble(
    dataset: &Dataset,
    cfg: &PipelineConfig,
    on_epoch: &mut dyn FnMut(usize, &EpochRecord),
) -> Result<Vec<TrainOutcome>> {
    (0..cfg.train.ensemble_size)
        .map(|k| {
            let mut member = cfg.clone();
            member.train.seed = cfg.train.seed.wrapping_add(k as u64);
            train(dataset, &member, &mut |r| on_epoch(k, r))
        })
        .collect()
}

fn check_members(models: &[&ModelParams]) -> Result<()> {
    let first = models
        .first()
        .ok_or_else(|| Error::Ensemble("an ensemble needs at least one member".into()))?;
    if models.iter().any(|m| m.config() != first.config()) {
        return Err(Error::Ensemble("ensemble members have different model configurations".into()));
    }
    Ok(())
}

/// Per-input class probabilities and decisions of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    /// Mean member softmax, or vote shares under majority voting.
    pub probabilities: Vec<Vec<f64>>,
    pub classes: Vec<usize>,
}

/// Combines members' eval-mode softmax outputs.
pub fn ensemble_predict(
    models: &[&ModelParams],
    inputs: &[Vec<f64>],
    rule: EnsembleRule,
    batch: usize,
) -> Result<EnsemblePrediction> {
    check_members(models)?;
    let c = models[0].config().num_classes;
    let mut mean = vec![vec![0.0; c]; inputs.len()];
    let mut votes = vec![vec![0.0; c]; inputs.len()];
    for m in models {
        let logits = infer_logits(m, inputs, batch)?;
        for ((row, acc), vote) in logits.iter().zip(&mut mean).zip(&mut votes) {
            let p = kernels::softmax_rows(row, c);
            acc.iter_mut().zip(&p).for_each(|(a, v)| *a += v);
            vote[argmax(&p)] += 1.0;
        }
    }
    let n = models.len() as f64;
    for row in mean.iter_mut().chain(votes.iter_mut()) {
        row.iter_mut().for_each(|v| *v /= n);
    }
    let classes = match rule {
        EnsembleRule::MeanProbability => mean.iter().map(|r| argmax(r)).collect(),
        // Ties between vote counts go to the higher mean probability.
        EnsembleRule::MajorityVote => votes
            .iter()
            .zip(&mean)
            .map(|(v, p)| {
                let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let tied: Vec<f64> = v.iter().zip(p).map(|(&v, &p)| if v == top { p } else { -1.0 }).collect();
                argmax(&tied)
            })
            .collect(),
    };
    let probabilities = match rule {
        EnsembleRule::MeanProbability => mean,
        EnsembleRule::MajorityVote => votes,
    };
    Ok(EnsemblePrediction { probabilities, classes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
    pub prediction: EnsemblePrediction,
}

/// Eval-mode metrics of one model or an ensemble on labeled signals, using
/// the fixed evaluation augmentation seed.
pub fn evaluate(
    models: &[&ModelParams],
    signals: &[&Signal],
    cfg: &PipelineConfig,
    positive_class: Option<usize>,
) -> Result<Evaluation> {
    check_members(models)?;
    if signals.is_empty() {
        return Err(Error::Evaluation("no signals to evaluate".into()));
    }
    let labels = labels_of(signals, "evaluation")?;
    let inputs = prepare_inputs(signals, &cfg.preprocess, &cfg.augment)?;
    let prediction = ensemble_predict(models, &inputs, cfg.train.ensemble_rule, cfg.train.batch_size)?;
    let cm = confusion(&labels, &prediction.classes, models[0].config().num_classes)?;
    let report = metrics(&cm, positive_class)?;
    Ok(Evaluation {
        confusion: cm,
        report,
        prediction,
    })
}

/// Analytic storage of 32-bit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryEstimate {
    pub parameters: usize,
    pub bytes_per_model: usize,
    pub ensemble_size: usize,
    pub bytes_ensemble: usize,
}

impl MemoryEstimate {
    pub fn new(cfg: &ModelConfig, ensemble_size: usize) -> Self {
        let parameters = param_count(cfg);
        Self {
            parameters,
            bytes_per_model: parameters * 4,
            ensemble_size,
            bytes_ensemble: parameters * 4 * ensemble_size,
        }
    }

    pub fn megabytes_per_model(&self) -> f64 {
        self.bytes_per_model as f64 / 1e6
    }

    pub fn megabytes_ensemble(&self) -> f64 {
        self.bytes_ensemble as f64 / 1e6
    }
}
