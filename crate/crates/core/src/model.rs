//! 1-D ResNet with a channel-gating attention block and a two-layer
//! classifier head.
//!
//! The forward pass is `stem conv → bn → relu → maxpool → residual layers →
//! global average pool → attention gate → linear → relu → dropout → linear`,
//! producing logits. Two paths compute it: [`ModelParams::forward`] records
//! an autodiff graph, [`ModelParams::infer`] runs the same arithmetic with
//! plain kernels in eval mode.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::tensor::kernels::{self, window_out_len};
use crate::tensor::{BatchNormLayer, Conv1dLayer, Graph, LinearLayer, Mode, ParamRef, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StemConfig {
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub pool_kernel: usize,
    pub pool_stride: usize,
    pub pool_padding: usize,
}

impl Default for StemConfig {
    fn default() -> Self {
        Self {
            channels: 64,
            kernel: 15,
            stride: 2,
            padding: 7,
            pool_kernel: 3,
            pool_stride: 2,
            pool_padding: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub out_channels: usize,
    pub num_blocks: usize,
    pub first_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub in_channels: usize,
    pub num_classes: usize,
    pub stem: StemConfig,
    pub layers: Vec<LayerSpec>,
    pub block_kernel: usize,
    pub block_padding: usize,
    /// Attention bottleneck width is the final channel count over this.
    pub attention_divisor: usize,
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let layer = |out_channels| LayerSpec {
            out_channels,
            num_blocks: 2,
            first_stride: 2,
        };
        Self {
            in_channels: 1,
            num_classes: 2,
            stem: StemConfig::default(),
            layers: vec![layer(128), layer(256), layer(512)],
            block_kernel: 5,
            block_padding: 2,
            attention_divisor: 8,
            hidden: 256,
            dropout: 0.6,
        }
    }
}

impl ModelConfig {
    pub fn with_classes(num_classes: usize) -> Self {
        Self {
            num_classes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let arch = |msg: String| Err(Error::Architecture(msg));
        let s = &self.stem;
        if self.in_channels == 0 || self.num_classes == 0 || self.hidden == 0 {
            return arch("in_channels, num_classes and hidden must be positive".into());
        }
        if s.channels == 0 || s.kernel == 0 || s.stride == 0 || s.pool_kernel == 0 || s.pool_stride == 0 {
            return arch("stem channels, kernels and strides must be positive".into());
        }
        if s.pool_padding >= s.pool_kernel {
            return arch(format!(
                "stem pool padding {} must be smaller than its kernel {}",
                s.pool_padding, s.pool_kernel
            ));
        }
        if self.layers.is_empty() {
            return arch("at least one residual layer is required".into());
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.out_channels == 0 || l.num_blocks == 0 || l.first_stride == 0 {
                return arch(format!("layer{} needs positive channels, blocks and stride", i + 1));
            }
        }
        if self.block_kernel == 0 {
            return arch("block kernel must be positive".into());
        }
        if 2 * self.block_padding + 1 != self.block_kernel {
            return arch(format!(
                "block padding {} does not preserve length for kernel {}",
                self.block_padding, self.block_kernel
            ));
        }
        let width = self.feature_width();
        if self.attention_divisor == 0 || width % self.attention_divisor != 0 {
            return arch(format!(
                "feature width {width} is not divisible by the attention divisor {}",
                self.attention_divisor
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return arch(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }

    /// Channel count of the pooled feature vector.
    pub fn feature_width(&self) -> usize {
        self.layers.last().map_or(self.stem.channels, |l| l.out_channels)
    }

    pub fn attention_width(&self) -> usize {
        self.feature_width() / self.attention_divisor.max(1)
    }

    /// Temporal length after every stage, or an error naming the first
    /// stage whose window does not fit or whose input is shorter than its
    /// stride.
    pub fn stage_lengths(&self, len: usize) -> Result<Vec<(String, usize)>> {
        let s = &self.stem;
        let mut stages = vec![
            ("stem conv", s.kernel, s.stride, s.padding),
            ("stem maxpool", s.pool_kernel, s.pool_stride, s.pool_padding),
        ];
        let names: Vec<String> = (1..=self.layers.len()).map(|i| format!("layer{i}")).collect();
        for (name, l) in names.iter().zip(&self.layers) {
            stages.push((name, self.block_kernel, l.first_stride, self.block_padding));
        }
        let mut out = Vec::with_capacity(stages.len());
        let mut cur = len;
        for (name, k, stride, p) in stages {
            let next = window_out_len(cur, k, stride, p).ok().filter(|_| cur >= stride);
            cur = next.ok_or_else(|| {
                Error::Shape(format!("input too short: {name} receives length {cur} (kernel {k}, stride {stride})"))
            })?;
            out.push((String::from(name), cur));
        }
        Ok(out)
    }

    /// Smallest input length the network accepts.
    pub fn min_input_len(&self) -> usize {
        (1..).find(|&l| self.stage_lengths(l).is_ok()).expect("some length fits")
    }
}

/// Role of a named tensor, deciding gradient and weight-decay treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorRole {
    Weight,
    Bias,
    /// Batch-norm scale or shift.
    Norm,
    /// Batch-norm running statistic; not trainable.
    Running,
}

impl TensorRole {
    pub fn trainable(self) -> bool {
        self != TensorRole::Running
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Downsample {
    pub conv: Conv1dLayer,
    pub bn: BatchNormLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResBlock {
    pub conv1: Conv1dLayer,
    pub bn1: BatchNormLayer,
    pub conv2: Conv1dLayer,
    pub bn2: BatchNormLayer,
    pub downsample: Option<Downsample>,
}

impl ResBlock {
    fn new<R: Rng>(in_ch: usize, out_ch: usize, stride: usize, cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        let (k, p) = (cfg.block_kernel, cfg.block_padding);
        let downsample = if stride != 1 || in_ch != out_ch {
            Some(Downsample {
                conv: Conv1dLayer::new(in_ch, out_ch, 1, stride, 0, rng)?,
                bn: BatchNormLayer::new(out_ch),
            })
        } else {
            None
        };
        Ok(Self {
            conv1: Conv1dLayer::new(in_ch, out_ch, k, stride, p, rng)?,
            bn1: BatchNormLayer::new(out_ch),
            conv2: Conv1dLayer::new(out_ch, out_ch, k, 1, p, rng)?,
            bn2: BatchNormLayer::new(out_ch),
            downsample,
        })
    }

    pub fn forward<'a>(&'a mut self, g: &mut Graph<'a>, x: Var, mode: Mode) -> Result<Var> {
        let h = self.conv1.forward(g, x)?;
        let h = self.bn1.forward(g, h, mode)?;
        let h = g.relu(h);
        let h = self.conv2.forward(g, h)?;
        let h = self.bn2.forward(g, h, mode)?;
        let identity = match &mut self.downsample {
            Some(d) => {
                let s = d.conv.forward(g, x)?;
                d.bn.forward(g, s, mode)?
            }
            None => x,
        };
        if g.shape(h) != g.shape(identity) {
            return Err(Error::Architecture(format!(
                "residual paths disagree: main {:?}, skip {:?}",
                g.shape(h),
                g.shape(identity)
            )));
        }
        let sum = g.add(h, identity)?;
        Ok(g.relu(sum))
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let h = self.conv1.apply(x)?;
        let h = relu(self.bn1.apply(&h)?);
        let h = self.bn2.apply(&self.conv2.apply(&h)?)?;
        let identity = match &self.downsample {
            Some(d) => d.bn.apply(&d.conv.apply(x)?)?,
            None => x.clone(),
        };
        if h.shape() != identity.shape() {
            return Err(Error::Architecture(format!(
                "residual paths disagree: main {:?}, skip {:?}",
                h.shape(),
                identity.shape()
            )));
        }
        let data = h.data().iter().zip(identity.data()).map(|(a, b)| (a + b).max(0.0)).collect();
        Tensor::new(h.shape().to_vec(), data)
    }
}

/// `z ⊙ sigmoid(fc2(relu(fc1(z))))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub fc1: LinearLayer,
    pub fc2: LinearLayer,
}

impl Attention {
    pub fn forward<'a>(&'a mut self, g: &mut Graph<'a>, z: Var) -> Result<Var> {
        let h = self.fc1.forward(g, z)?;
        let h = g.relu(h);
        let a = self.fc2.forward(g, h)?;
        let a = g.sigmoid(a);
        g.mul(z, a)
    }

    pub fn apply(&self, z: &Tensor) -> Result<Tensor> {
        let h = relu(self.fc1.apply(z)?);
        let a = self.fc2.apply(&h)?;
        let data = z.data().iter().zip(a.data()).map(|(z, a)| z * kernels::sigmoid(*a)).collect();
        Tensor::new(z.shape().to_vec(), data)
    }
}

fn relu(mut t: Tensor) -> Tensor {
    t.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    cfg: ModelConfig,
    pub stem_conv: Conv1dLayer,
    pub stem_bn: BatchNormLayer,
    pub layers: Vec<Vec<ResBlock>>,
    pub attention: Attention,
    pub fc1: LinearLayer,
    pub fc2: LinearLayer,
}

type Entry<'a> = (String, TensorRole, &'a Tensor);
type EntryMut<'a> = (String, TensorRole, &'a mut Tensor);

fn conv_refs<'a>(p: &str, c: &'a Conv1dLayer, out: &mut Vec<Entry<'a>>) {
    out.push((format!("{p}.weight"), TensorRole::Weight, &c.weight));
    out.push((format!("{p}.bias"), TensorRole::Bias, &c.bias));
}

fn bn_refs<'a>(p: &str, b: &'a BatchNormLayer, out: &mut Vec<Entry<'a>>) {
    out.push((format!("{p}.gamma"), TensorRole::Norm, &b.gamma));
    out.push((format!("{p}.beta"), TensorRole::Norm, &b.beta));
    out.push((format!("{p}.running_mean"), TensorRole::Running, &b.running_mean));
    out.push((format!("{p}.running_var"), TensorRole::Running, &b.running_var));
}

fn linear_refs<'a>(p: &str, l: &'a LinearLayer, out: &mut Vec<Entry<'a>>) {
    out.push((format!("{p}.weight"), TensorRole::Weight, &l.weight));
    out.push((format!("{p}.bias"), TensorRole::Bias, &l.bias));
}

fn conv_mut<'a>(p: &str, c: &'a mut Conv1dLayer, out: &mut Vec<EntryMut<'a>>) {
    out.push((format!("{p}.weight"), TensorRole::Weight, &mut c.weight));
    out.push((format!("{p}.bias"), TensorRole::Bias, &mut c.bias));
}

fn bn_mut<'a>(p: &str, b: &'a mut BatchNormLayer, out: &mut Vec<EntryMut<'a>>) {
    out.push((format!("{p}.gamma"), TensorRole::Norm, &mut b.gamma));
    out.push((format!("{p}.beta"), TensorRole::Norm, &mut b.beta));
    out.push((format!("{p}.running_mean"), TensorRole::Running, &mut b.running_mean));
    out.push((format!("{p}.running_var"), TensorRole::Running, &mut b.running_var));
}

fn linear_mut<'a>(p: &str, l: &'a mut LinearLayer, out: &mut Vec<EntryMut<'a>>) {
    out.push((format!("{p}.weight"), TensorRole::Weight, &mut l.weight));
    out.push((format!("{p}.bias"), TensorRole::Bias, &mut l.bias));
}

impl ModelParams {
    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Every tensor in a fixed order, including running statistics.
    pub fn named_tensors(&self) -> Vec<Entry<'_>> {
        let mut out = Vec::new();
        conv_refs("stem.conv", &self.stem_conv, &mut out);
        bn_refs("stem.bn", &self.stem_bn, &mut out);
        for (i, layer) in self.layers.iter().enumerate() {
            for (j, b) in layer.iter().enumerate() {
                let p = format!("layer{}.{j}", i + 1);
                conv_refs(&format!("{p}.conv1"), &b.conv1, &mut out);
                bn_refs(&format!("{p}.bn1"), &b.bn1, &mut out);
                conv_refs(&format!("{p}.conv2"), &b.conv2, &mut out);
                bn_refs(&format!("{p}.bn2"), &b.bn2, &mut out);
                if let Some(d) = &b.downsample {
                    conv_refs(&format!("{p}.downsample.conv"), &d.conv, &mut out);
                    bn_refs(&format!("{p}.downsample.bn"), &d.bn, &mut out);
                }
            }
        }
        linear_refs("attention.fc1", &self.attention.fc1, &mut out);
        linear_refs("attention.fc2", &self.attention.fc2, &mut out);
        linear_refs("classifier.fc1", &self.fc1, &mut out);
        linear_refs("classifier.fc2", &self.fc2, &mut out);
        out
    }

    /// Mutable view in the same order as [`named_tensors`](Self::named_tensors).
    pub fn named_tensors_mut(&mut self) -> Vec<EntryMut<'_>> {
        let mut out = Vec::new();
        conv_mut("stem.conv", &mut self.stem_conv, &mut out);
        bn_mut("stem.bn", &mut self.stem_bn, &mut out);
        for (i, layer) in self.layers.iter_mut().enumerate() {
            for (j, b) in layer.iter_mut().enumerate() {
                let p = format!("layer{}.{j}", i + 1);
                conv_mut(&format!("{p}.conv1"), &mut b.conv1, &mut out);
                bn_mut(&format!("{p}.bn1"), &mut b.bn1, &mut out);
                conv_mut(&format!("{p}.conv2"), &mut b.conv2, &mut out);
                bn_mut(&format!("{p}.bn2"), &mut b.bn2, &mut out);
                if let Some(d) = &mut b.downsample {
                    conv_mut(&format!("{p}.downsample.conv"), &mut d.conv, &mut out);
                    bn_mut(&format!("{p}.downsample.bn"), &mut d.bn, &mut out);
                }
            }
        }
        linear_mut("attention.fc1", &mut self.attention.fc1, &mut out);
        linear_mut("attention.fc2", &mut self.attention.fc2, &mut out);
        linear_mut("classifier.fc1", &mut self.fc1, &mut out);
        linear_mut("classifier.fc2", &mut self.fc2, &mut out);
        out
    }

    /// Trainable tensors for the optimizer; decay applies to weights only.
    pub fn parameters_mut(&mut self) -> Vec<ParamRef<'_>> {
        self.named_tensors_mut()
            .into_iter()
            .filter(|(_, role, _)| role.trainable())
            .map(|(name, role, tensor)| ParamRef {
                name,
                decay: role == TensorRole::Weight,
                tensor,
            })
            .collect()
    }

    /// Number of trainable scalars, counted by walking the tensors.
    pub fn num_parameters(&self) -> usize {
        self.named_tensors()
            .iter()
            .filter(|(_, role, _)| role.trainable())
            .map(|(_, _, t)| t.numel())
            .sum()
    }

    pub fn zero_grad(&mut self) {
        for (_, _, t) in self.named_tensors_mut() {
            t.zero_grad();
        }
    }

    /// Replaces every tensor; names and shapes must match exactly.
    pub fn load_named(&mut self, entries: &[(String, Tensor)]) -> Result<()> {
        let mut slots = self.named_tensors_mut();
        if slots.len() != entries.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} tensors, model expects {}",
                entries.len(),
                slots.len()
            )));
        }
        for ((name, _, slot), (en, et)) in slots.iter().zip(entries) {
            if name != en {
                return Err(Error::Checkpoint(format!("expected tensor {name}, found {en}")));
            }
            if slot.shape() != et.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name}: shape {:?} where {:?} was expected",
                    et.shape(),
                    slot.shape()
                )));
            }
        }
        for ((_, role, slot), (_, et)) in slots.iter_mut().zip(entries) {
            let mut t = Tensor::new(et.shape().to_vec(), et.data().to_vec())?;
            t.set_requires_grad(role.trainable());
            **slot = t;
        }
        Ok(())
    }

    fn check_input(&self, shape: &[usize]) -> Result<[usize; 3]> {
        let [b, c, l] = kernels::dims3(shape)?;
        if c != self.cfg.in_channels {
            return Err(Error::Shape(format!(
                "model expects {} input channel(s), got {c}",
                self.cfg.in_channels
            )));
        }
        self.cfg.stage_lengths(l)?;
        Ok([b, c, l])
    }

    /// Records the forward pass of `x: [B, in_channels, L]` on `g` and
    /// returns the `[B, num_classes]` logits. In train mode batch norm uses
    /// batch statistics and updates its running estimates, and dropout draws
    /// from `rng`.
    pub fn forward<'a, R: Rng>(
        &'a mut self,
        g: &mut Graph<'a>,
        x: Var,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        let [b, _, _] = self.check_input(g.shape(x))?;
        let s = &self.cfg.stem;
        let (pk, ps, pp, dropout) = (s.pool_kernel, s.pool_stride, s.pool_padding, self.cfg.dropout);
        let h = self.stem_conv.forward(g, x)?;
        let h = self.stem_bn.forward(g, h, mode)?;
        let h = g.relu(h);
        let mut h = g.maxpool1d(h, pk, ps, pp)?;
        for layer in &mut self.layers {
            for block in layer.iter_mut() {
                h = block.forward(g, h, mode)?;
            }
        }
        let pooled = g.avgpool_to_one(h)?;
        let width = g.shape(pooled)[1];
        let z = g.reshape(pooled, &[b, width])?;
        let z = self.attention.forward(g, z)?;
        let h = self.fc1.forward(g, z)?;
        let mut h = g.relu(h);
        if mode == Mode::Train && dropout > 0.0 {
            h = g.dropout(h, dropout, rng)?;
        }
        self.fc2.forward(g, h)
    }

    /// Output of the last residual layer, `[B, width, len]`, in eval mode.
    pub fn features(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x.shape())?;
        let s = &self.cfg.stem;
        let h = relu(self.stem_bn.apply(&self.stem_conv.apply(x)?)?);
        let [b, c, l] = kernels::dims3(h.shape())?;
        let (pooled, _, out_len) = kernels::maxpool1d_forward(h.data(), b * c, l, s.pool_kernel, s.pool_stride, s.pool_padding)?;
        let mut h = Tensor::new([b, c, out_len], pooled)?;
        for block in self.layers.iter().flatten() {
            h = block.apply(&h)?;
        }
        Ok(h)
    }

    /// Eval-mode logits without building a graph.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let h = self.features(x)?;
        let [b, c, l] = kernels::dims3(h.shape())?;
        let z: Vec<f64> = h.data().chunks_exact(l).map(|r| r.iter().sum::<f64>() / l as f64).collect();
        let z = self.attention.apply(&Tensor::new([b, c], z)?)?;
        let h = relu(self.fc1.apply(&z)?);
        self.fc2.apply(&h)
    }

    /// Eval-mode class probabilities, `[B, num_classes]`.
    pub fn predict_proba(&self, x: &Tensor) -> Result<Tensor> {
        let logits = self.infer(x)?;
        let probs = kernels::softmax_rows(logits.data(), self.cfg.num_classes);
        Tensor::new(logits.shape().to_vec(), probs)
    }
}

/// Initializes every layer from a stream derived from `seed`.
pub fn build_model(cfg: &ModelConfig, seed: u64) -> Result<ModelParams> {
    cfg.validate()?;
    let mut rng = seed::rng(seed, &[0x0DE1]);
    let s = &cfg.stem;
    let stem_conv = Conv1dLayer::new(cfg.in_channels, s.channels, s.kernel, s.stride, s.padding, &mut rng)?;
    let stem_bn = BatchNormLayer::new(s.channels);
    let mut in_ch = s.channels;
    let mut layers = Vec::with_capacity(cfg.layers.len());
    for spec in &cfg.layers {
        let mut blocks = Vec::with_capacity(spec.num_blocks);
        for j in 0..spec.num_blocks {
            let stride = if j == 0 { spec.first_stride } else { 1 };
            blocks.push(ResBlock::new(in_ch, spec.out_channels, stride, cfg, &mut rng)?);
            in_ch = spec.out_channels;
        }
        layers.push(blocks);
    }
    let width = cfg.feature_width();
    let att = cfg.attention_width();
    let attention = Attention {
        fc1: LinearLayer::new(width, att, &mut rng)?,
        fc2: LinearLayer::new(att, width, &mut rng)?,
    };
    let fc1 = LinearLayer::new(width, cfg.hidden, &mut rng)?;
    let fc2 = LinearLayer::new(cfg.hidden, cfg.num_classes, &mut rng)?;
    Ok(ModelParams {
        cfg: cfg.clone(),
        stem_conv,
        stem_bn,
        layers,
        attention,
        fc1,
        fc2,
    })
}

fn conv_params(i: usize, o: usize, k: usize) -> usize {
    o * i * k + o
}

fn linear_params(i: usize, o: usize) -> usize {
    o * i + o
}

/// Closed-form trainable parameter count of a configuration.
pub fn param_count(cfg: &ModelConfig) -> usize {
    let s = &cfg.stem;
    let mut total = conv_params(cfg.in_channels, s.channels, s.kernel) + 2 * s.channels;
    let mut in_ch = s.channels;
    for l in &cfg.layers {
        let o = l.out_channels;
        let block = |i| conv_params(i, o, cfg.block_kernel) + conv_params(o, o, cfg.block_kernel) + 4 * o;
        total += block(in_ch);
        if l.first_stride != 1 || in_ch != o {
            total += conv_params(in_ch, o, 1) + 2 * o;
        }
        total += (l.num_blocks - 1) * block(o);
        in_ch = o;
    }
    let (w, a) = (cfg.feature_width(), cfg.attention_width());
    total + linear_params(w, a) + linear_params(a, w) + linear_params(w, cfg.hidden) + linear_params(cfg.hidden, cfg.num_classes)
}

/// One row of the architecture summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageInfo {
    pub name: String,
    pub output_shape: Vec<usize>,
    pub params: usize,
}

/// Per-stage output shapes (batch 1) and parameter counts for inputs of
/// length `len`.
pub fn describe(cfg: &ModelConfig, len: usize) -> Result<Vec<StageInfo>> {
    cfg.validate()?;
    let lens = cfg.stage_lengths(len)?;
    let s = &cfg.stem;
    let row = |name: &str, output_shape: Vec<usize>, params| StageInfo {
        name: name.into(),
        output_shape,
        params,
    };
    let mut rows = vec![
        row("input", vec![1, cfg.in_channels, len], 0),
        row(
            "stem (conv, bn, relu)",
            vec![1, s.channels, lens[0].1],
            conv_params(cfg.in_channels, s.channels, s.kernel) + 2 * s.channels,
        ),
        row("stem maxpool", vec![1, s.channels, lens[1].1], 0),
    ];
    let mut in_ch = s.channels;
    for (i, l) in cfg.layers.iter().enumerate() {
        let single = ModelConfig {
            stem: StemConfig {
                channels: in_ch,
                ..s.clone()
            },
            layers: vec![*l],
            ..cfg.clone()
        };
        let empty = ModelConfig {
            layers: Vec::new(),
            ..single.clone()
        };
        // Difference of two closed forms isolates this layer's blocks.
        let head = |c: &ModelConfig| {
            let (w, a) = (c.feature_width(), c.attention_width());
            linear_params(w, a) + linear_params(a, w) + linear_params(w, c.hidden)
        };
        let params = (param_count(&single) - head(&single)) - (param_count(&empty) - head(&empty));
        rows.push(row(&format!("layer{}", i + 1), vec![1, l.out_channels, lens[i + 2].1], params));
        in_ch = l.out_channels;
    }
    let (w, a) = (cfg.feature_width(), cfg.attention_width());
    rows.push(row("avgpool + squeeze", vec![1, w], 0));
    rows.push(row("attention", vec![1, w], linear_params(w, a) + linear_params(a, w)));
    rows.push(row(
        "classifier",
        vec![1, cfg.num_classes],
        linear_params(w, cfg.hidden) + linear_params(cfg.hidden, cfg.num_classes),
    ));
    Ok(rows)
}

/// Plain-text table of [`describe`] with a total line.
pub fn describe_table(cfg: &ModelConfig, len: usize) -> Result<String> {
    let rows = describe(cfg, len)?;
    let shape = |s: &[usize]| {
        let parts: Vec<String> = s.iter().map(|d| format!("{d}")).collect();
        format!("[{}]", parts.join(", "))
    };
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} {:<18} {:>12}", "stage", "output shape", "parameters");
    for r in &rows {
        let _ = writeln!(out, "{:<24} {:<18} {:>12}", r.name, shape(&r.output_shape), r.params);
    }
    let _ = writeln!(out, "{:<24} {:<18} {:>12}", "total", "", param_count(cfg));
    Ok(out)
}
