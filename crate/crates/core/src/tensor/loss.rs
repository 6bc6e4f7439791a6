use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{kernels, Tensor};
use crate::{Error, Result};

/// Lower bound applied to probabilities before taking a logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Focusing exponent; 0 gives weighted cross-entropy.
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { gamma: 2.0, alpha: 1.0 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("loss gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("loss alpha must be finite and > 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Batch-mean loss with its gradient with respect to the logits.
#[derive(Debug, Clone)]
pub struct FocalOutput {
    pub loss: f64,
    /// Same layout as the logits.
    pub grad: Vec<f64>,
}

fn check_targets(logits: &Tensor, targets: &[usize]) -> Result<[usize; 2]> {
    let [batch, classes] = kernels::dims2(logits.shape())?;
    if targets.len() != batch {
        return Err(Error::Shape(format!("{} targets for a batch of {batch}", targets.len())));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::Label(format!("target class {t} out of range for {classes} classes")));
    }
    Ok([batch, classes])
}

/// `mean_b −α (1 − p_t)^γ ln(max(p_t, LOG_FLOOR))` over a `[B, C]` batch.
pub fn focal_loss(logits: &Tensor, targets: &[usize], cfg: &LossConfig) -> Result<FocalOutput> {
    cfg.validate()?;
    let [batch, classes] = check_targets(logits, targets)?;
    let probs = kernels::softmax_rows(logits.data(), classes);
    let inv_b = 1.0 / batch as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(probs.len());
    for (row, &t) in probs.chunks_exact(classes).zip(targets) {
        let pt = row[t];
        let log_pt = libm::log(pt.max(LOG_FLOOR));
        let q = 1.0 - pt;
        let modulator = if cfg.gamma == 0.0 { 1.0 } else { libm::pow(q, cfg.gamma) };
        loss += -cfg.alpha * modulator * log_pt;
        // dL/dp_t · p_t, which multiplies (δ_jt − p_j) for d/dz_j.
        let focus = if cfg.gamma == 0.0 || q <= 0.0 {
            0.0
        } else {
            cfg.alpha * cfg.gamma * libm::pow(q, cfg.gamma - 1.0) * pt * log_pt
        };
        // The floored log has zero derivative below the floor.
        let direct = if pt > LOG_FLOOR { cfg.alpha * modulator } else { 0.0 };
        let s = focus - direct;
        grad.extend(row.iter().enumerate().map(|(j, &p)| {
            let delta = if j == t { 1.0 } else { 0.0 };
            s * (delta - p) * inv_b
        }));
    }
    Ok(FocalOutput {
        loss: loss * inv_b,
        grad,
    })
}

/// Mean cross-entropy through log-softmax, with the same log floor.
pub fn cross_entropy(logits: &Tensor, targets: &[usize]) -> Result<f64> {
    let [batch, classes] = check_targets(logits, targets)?;
    let mut total = 0.0;
    for (row, &t) in logits.data().chunks_exact(classes).zip(targets) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + libm::log(row.iter().map(|&z| libm::exp(z - m)).sum::<f64>());
        let log_pt = (row[t] - lse).max(libm::log(LOG_FLOOR));
        total -= log_pt;
    }
    Ok(total / batch as f64)
}
