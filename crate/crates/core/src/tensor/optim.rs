use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Config(format!("optimizer {what} out of range: {v}")));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", self.learning_rate);
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad("beta1", self.beta1);
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return bad("beta2", self.beta2);
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps", self.eps);
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay", self.weight_decay);
        }
        Ok(())
    }
}

/// A parameter handed to the optimizer for one step.
pub struct ParamRef<'a> {
    pub name: String,
    /// Whether decoupled weight decay applies (weights only).
    pub decay: bool,
    pub tensor: &'a mut Tensor,
}

struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Adam with decoupled weight decay.
pub struct AdamW {
    cfg: OptimizerConfig,
    step: u64,
    moments: BTreeMap<String, Moments>,
}

impl AdamW {
    pub fn new(cfg: OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            step: 0,
            moments: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn learning_rate(&self) -> f64 {
        self.cfg.learning_rate
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.cfg.learning_rate = lr;
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update to every parameter. All gradients are checked
    /// before any parameter changes.
    pub fn step(&mut self, params: &mut [ParamRef<'_>]) -> Result<()> {
        for p in params.iter() {
            match p.tensor.grad() {
                None => return Err(Error::Optimizer(format!("parameter {} has no gradient", p.name))),
                Some(g) if g.iter().any(|v| !v.is_finite()) => {
                    return Err(Error::NonFinite(format!("gradient of {}", p.name)))
                }
                Some(_) => {}
            }
            if let Some(m) = self.moments.get(&p.name) {
                if m.m.len() != p.tensor.numel() {
                    return Err(Error::Optimizer(format!("parameter {} changed size", p.name)));
                }
            }
        }
        self.step += 1;
        let c = self.cfg;
        let t = self.step as f64;
        let bc1 = 1.0 - libm::pow(c.beta1, t);
        let bc2 = 1.0 - libm::pow(c.beta2, t);
        for p in params.iter_mut() {
            let n = p.tensor.numel();
            let st = self.moments.entry(p.name.clone()).or_insert_with(|| Moments {
                m: vec![0.0; n],
                v: vec![0.0; n],
            });
            let grad = p.tensor.grad.take().expect("checked above");
            let wd = if p.decay { c.weight_decay } else { 0.0 };
            for (((x, g), m), v) in p.tensor.data.iter_mut().zip(&grad).zip(&mut st.m).zip(&mut st.v) {
                *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                let mh = *m / bc1;
                let vh = *v / bc2;
                *x -= c.learning_rate * (mh / (libm::sqrt(vh) + c.eps) + wd * *x);
            }
            p.tensor.grad = Some(grad);
        }
        Ok(())
    }
}
