//! Single-use reverse-mode computation graph.
//!
//! A [`Graph`] records every operation of one forward pass. Parameters are
//! bound by mutable reference for the graph's lifetime; [`Graph::backward`]
//! consumes the graph and adds each gradient into the bound tensor's
//! `grad` buffer, so calling it on two graphs without zeroing accumulates.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::kernels::{self, ConvGeom};
use super::loss::{focal_loss, LossConfig};
use super::Tensor;
use crate::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Batch statistics computed by a training-mode batch-norm node.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Population variance over `(batch, len)`.
    pub var: Vec<f64>,
    /// Number of values each channel statistic was taken over.
    pub count: usize,
}

enum Slot<'a> {
    Owned(Tensor),
    Bound(&'a mut Tensor),
}

impl Slot<'_> {
    fn get(&self) -> &Tensor {
        match self {
            Slot::Owned(t) => t,
            Slot::Bound(t) => t,
        }
    }
}

enum Op {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    Sum(Var),
    Reshape(Var),
    Conv1d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: ConvGeom,
    },
    MaxPool {
        input: Var,
        argmax: Vec<usize>,
    },
    AvgPool {
        input: Var,
        len: usize,
    },
    Linear {
        input: Var,
        weight: Var,
        bias: Var,
    },
    BatchNorm {
        input: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        batch_stats: bool,
    },
    Dropout {
        input: Var,
        mask: Vec<f64>,
    },
    Softmax(Var),
    Focal {
        logits: Var,
        grad: Vec<f64>,
    },
}

struct Node<'a> {
    value: Slot<'a>,
    op: Op,
    tracked: bool,
}

#[derive(Default)]
pub struct Graph<'a> {
    nodes: Vec<Node<'a>>,
    non_finite: Option<String>,
}

impl<'a> Graph<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Binds an external tensor; it is differentiated iff `requires_grad`.
    pub fn bind(&mut self, tensor: &'a mut Tensor) -> Var {
        let tracked = tensor.requires_grad();
        self.push(Slot::Bound(tensor), Op::Leaf, tracked, "input")
    }

    /// An owned input that never receives a gradient.
    pub fn constant(&mut self, tensor: Tensor) -> Var {
        self.push(Slot::Owned(tensor), Op::Leaf, false, "constant")
    }

    pub fn value(&self, v: Var) -> &Tensor {
        self.nodes[v.0].value.get()
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    fn data(&self, v: Var) -> &[f64] {
        self.value(v).data()
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    fn push(&mut self, value: Slot<'a>, op: Op, tracked: bool, what: &str) -> Var {
        if self.non_finite.is_none() && !value.get().is_finite() {
            self.non_finite = Some(what.to_string());
        }
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn output(&mut self, shape: Vec<usize>, data: Vec<f64>, op: Op, inputs: &[Var], what: &str) -> Var {
        let tracked = inputs.iter().any(|&v| self.tracked(v));
        let t = Tensor::new(shape, data).expect("kernel output matches its shape");
        self.push(Slot::Owned(t), op, tracked, what)
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Shape(format!(
                "{what}: shapes {:?} and {:?} differ",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let data = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x + y).collect();
        Ok(self.output(self.shape(a).to_vec(), data, Op::Add(a, b), &[a, b], "add"))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let data = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x * y).collect();
        Ok(self.output(self.shape(a).to_vec(), data, Op::Mul(a, b), &[a, b], "mul"))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let data = self.data(a).iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
        self.output(self.shape(a).to_vec(), data, Op::Relu(a), &[a], "relu")
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let data = self.data(a).iter().map(|&x| kernels::sigmoid(x)).collect();
        self.output(self.shape(a).to_vec(), data, Op::Sigmoid(a), &[a], "sigmoid")
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        self.output(vec![1], vec![s], Op::Sum(a), &[a], "sum")
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(a).clone().reshape(shape.to_vec())?;
        Ok(self.output(shape.to_vec(), t.into_data(), Op::Reshape(a), &[a], "reshape"))
    }

    pub fn conv1d(&mut self, input: Var, weight: Var, bias: Option<Var>, stride: usize, padding: usize) -> Result<Var> {
        let geom = ConvGeom::new(self.shape(input), self.shape(weight), stride, padding)?;
        if let Some(b) = bias {
            if self.shape(b) != [geom.out_ch] {
                return Err(Error::Shape(format!(
                    "conv bias shape {:?}, expected [{}]",
                    self.shape(b),
                    geom.out_ch
                )));
            }
        }
        let out = kernels::conv1d_forward(
            self.data(input),
            self.data(weight),
            bias.map(|b| self.data(b)),
            &geom,
        );
        let mut inputs = vec![input, weight];
        inputs.extend(bias);
        Ok(self.output(
            vec![geom.batch, geom.out_ch, geom.out_len],
            out,
            Op::Conv1d {
                input,
                weight,
                bias,
                geom,
            },
            &inputs,
            "conv1d",
        ))
    }

    /// Max pooling over the time axis of `[B, C, L]`.
    pub fn maxpool1d(&mut self, input: Var, kernel: usize, stride: usize, padding: usize) -> Result<Var> {
        let [b, c, l] = kernels::dims3(self.shape(input))?;
        let (out, argmax, out_len) = kernels::maxpool1d_forward(self.data(input), b * c, l, kernel, stride, padding)?;
        Ok(self.output(vec![b, c, out_len], out, Op::MaxPool { input, argmax }, &[input], "maxpool"))
    }

    /// Adaptive average pooling to one step: `[B, C, L] -> [B, C, 1]`.
    pub fn avgpool_to_one(&mut self, input: Var) -> Result<Var> {
        let [b, c, l] = kernels::dims3(self.shape(input))?;
        let out = self.data(input).chunks_exact(l).map(|r| r.iter().sum::<f64>() / l as f64).collect();
        Ok(self.output(vec![b, c, 1], out, Op::AvgPool { input, len: l }, &[input], "avgpool"))
    }

    /// `[B, in] -> [B, out]` with weight `[out, in]` and bias `[out]`.
    pub fn linear(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let [batch, in_f] = kernels::dims2(self.shape(input))?;
        let [out_f, w_in] = kernels::dims2(self.shape(weight))?;
        if w_in != in_f || self.shape(bias) != [out_f] {
            return Err(Error::Shape(format!(
                "linear: input {:?}, weight {:?}, bias {:?}",
                self.shape(input),
                self.shape(weight),
                self.shape(bias)
            )));
        }
        let out = kernels::linear_forward(self.data(input), batch, in_f, self.data(weight), self.data(bias), out_f);
        Ok(self.output(vec![batch, out_f], out, Op::Linear { input, weight, bias }, &[input, weight, bias], "linear"))
    }

    fn check_norm_params(&self, input: Var, gamma: Var, beta: Var) -> Result<[usize; 3]> {
        let dims = kernels::dims3(self.shape(input))?;
        if self.shape(gamma) != [dims[1]] || self.shape(beta) != [dims[1]] {
            return Err(Error::Shape(format!(
                "batch norm over {} channels with gamma {:?}, beta {:?}",
                dims[1],
                self.shape(gamma),
                self.shape(beta)
            )));
        }
        Ok(dims)
    }

    /// Normalizes with the batch's own per-channel statistics.
    pub fn batch_norm_train(&mut self, input: Var, gamma: Var, beta: Var, eps: f64) -> Result<(Var, BatchStats)> {
        let dims @ [b, c, l] = self.check_norm_params(input, gamma, beta)?;
        if b * l < 2 {
            return Err(Error::Statistics(format!(
                "batch norm in train mode needs at least 2 values per channel, got {}",
                b * l
            )));
        }
        let (mean, var) = kernels::channel_moments(self.data(input), b, c, l);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / libm::sqrt(v + eps)).collect();
        let (y, xhat) = kernels::normalize(self.data(input), dims, &mean, &inv_std, self.data(gamma), self.data(beta));
        let op = Op::BatchNorm {
            input,
            gamma,
            beta,
            xhat,
            inv_std,
            batch_stats: true,
        };
        let out = self.output(dims.to_vec(), y, op, &[input, gamma, beta], "batch norm");
        Ok((out, BatchStats { mean, var, count: b * l }))
    }

    /// Normalizes with fixed statistics (evaluation mode).
    pub fn batch_norm_fixed(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        mean: &[f64],
        var: &[f64],
        eps: f64,
    ) -> Result<Var> {
        let dims = self.check_norm_params(input, gamma, beta)?;
        if mean.len() != dims[1] || var.len() != dims[1] {
            return Err(Error::Shape("running statistics do not match the channel count".into()));
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / libm::sqrt(v + eps)).collect();
        let (y, xhat) = kernels::normalize(self.data(input), dims, mean, &inv_std, self.data(gamma), self.data(beta));
        let op = Op::BatchNorm {
            input,
            gamma,
            beta,
            xhat,
            inv_std,
            batch_stats: false,
        };
        Ok(self.output(dims.to_vec(), y, op, &[input, gamma, beta], "batch norm"))
    }

    /// Inverted dropout: survivors are scaled by `1 / (1 - p)`.
    pub fn dropout<R: Rng>(&mut self, input: Var, p: f64, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!("dropout probability {p} outside [0, 1)")));
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..self.value(input).numel())
            .map(|_| if rng.random::<f64>() >= p { keep } else { 0.0 })
            .collect();
        Ok(self.dropout_with_mask(input, mask))
    }

    /// Dropout with an explicit multiplicative mask.
    pub fn dropout_with_mask(&mut self, input: Var, mask: Vec<f64>) -> Var {
        let data = self.data(input).iter().zip(&mask).map(|(x, m)| x * m).collect();
        self.output(self.shape(input).to_vec(), data, Op::Dropout { input, mask }, &[input], "dropout")
    }

    /// Softmax over the last axis of `[rows, cols]`.
    pub fn softmax(&mut self, input: Var) -> Result<Var> {
        let [_, cols] = kernels::dims2(self.shape(input))?;
        let out = kernels::softmax_rows(self.data(input), cols);
        Ok(self.output(self.shape(input).to_vec(), out, Op::Softmax(input), &[input], "softmax"))
    }

    /// Mean focal loss of `[B, C]` logits against class indices.
    pub fn focal_loss(&mut self, logits: Var, targets: &[usize], cfg: &LossConfig) -> Result<Var> {
        let out = focal_loss(self.value(logits), targets, cfg)?;
        Ok(self.output(vec![1], vec![out.loss], Op::Focal { logits, grad: out.grad }, &[logits], "focal loss"))
    }

    /// Propagates `d loss / d node` back to every bound tensor with
    /// `requires_grad`, adding into existing gradient buffers.
    pub fn backward(self, loss: Var) -> Result<()> {
        let Graph { mut nodes, non_finite } = self;
        if let Some(what) = non_finite {
            return Err(Error::NonFinite(what));
        }
        let root = nodes
            .get(loss.0)
            .ok_or_else(|| Error::Graph("loss is not a node of this graph".into()))?;
        if root.value.get().numel() != 1 {
            return Err(Error::Graph(format!(
                "backward needs a scalar, got shape {:?}",
                root.value.get().shape()
            )));
        }
        if !root.tracked {
            return Err(Error::Graph("loss does not depend on any tracked tensor".into()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !nodes[i].tracked {
                continue;
            }
            if let Op::Leaf = nodes[i].op {
                if let Slot::Bound(t) = &mut nodes[i].value {
                    if g.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite("backward".into()));
                    }
                    t.accumulate_grad(&g);
                }
                continue;
            }
            let node = &nodes[i];
            let val = |v: Var| nodes[v.0].value.get().data();
            let want = |v: Var| nodes[v.0].tracked;
            let mut push = |v: Var, delta: Vec<f64>| {
                if !nodes[v.0].tracked {
                    return;
                }
                match &mut grads[v.0] {
                    Some(acc) => acc.iter_mut().zip(&delta).for_each(|(a, d)| *a += d),
                    slot @ None => *slot = Some(delta),
                }
            };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::Add(a, b) => {
                    if want(*b) {
                        push(*b, g.clone());
                    }
                    push(*a, g);
                }
                Op::Mul(a, b) => {
                    let (xa, xb) = (val(*a), val(*b));
                    if want(*a) {
                        push(*a, g.iter().zip(xb).map(|(g, y)| g * y).collect());
                    }
                    if want(*b) {
                        push(*b, g.iter().zip(xa).map(|(g, x)| g * x).collect());
                    }
                }
                Op::Relu(a) => {
                    let d = g.iter().zip(val(*a)).map(|(g, &x)| if x > 0.0 { *g } else { 0.0 }).collect();
                    push(*a, d);
                }
                Op::Sigmoid(a) => {
                    let y = node.value.get().data();
                    push(*a, g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect());
                }
                Op::Sum(a) => push(*a, vec![g[0]; val(*a).len()]),
                Op::Reshape(a) => push(*a, g),
                Op::Conv1d {
                    input,
                    weight,
                    bias,
                    geom,
                } => {
                    let cg = kernels::conv1d_backward(val(*input), val(*weight), &g, geom, want(*input));
                    if let Some(dx) = cg.input {
                        push(*input, dx);
                    }
                    push(*weight, cg.weight);
                    if let Some(b) = bias {
                        push(*b, cg.bias);
                    }
                }
                Op::MaxPool { input, argmax } => {
                    let mut dx = vec![0.0; val(*input).len()];
                    for (&j, gv) in argmax.iter().zip(&g) {
                        dx[j] += gv;
                    }
                    push(*input, dx);
                }
                Op::AvgPool { input, len } => {
                    let scale = 1.0 / *len as f64;
                    push(*input, g.iter().flat_map(|&gv| core::iter::repeat_n(gv * scale, *len)).collect());
                }
                Op::Linear { input, weight, bias } => {
                    let [batch, in_f] = kernels::dims2(nodes[input.0].value.get().shape())?;
                    let out_f = g.len() / batch;
                    if want(*input) {
                        let mut dx = vec![0.0; batch * in_f];
                        kernels::gemm(batch, out_f, in_f, &g, (out_f, 1), val(*weight), (in_f, 1), 0.0, &mut dx, (in_f, 1));
                        push(*input, dx);
                    }
                    let mut dw = vec![0.0; out_f * in_f];
                    kernels::gemm(out_f, batch, in_f, &g, (1, out_f), val(*input), (in_f, 1), 0.0, &mut dw, (in_f, 1));
                    push(*weight, dw);
                    let mut db = vec![0.0; out_f];
                    for row in g.chunks_exact(out_f) {
                        db.iter_mut().zip(row).for_each(|(d, v)| *d += v);
                    }
                    push(*bias, db);
                }
                Op::BatchNorm {
                    input,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                    batch_stats,
                } => {
                    let [b, c, l] = kernels::dims3(nodes[input.0].value.get().shape())?;
                    let gam = val(*gamma);
                    let mut dgamma = vec![0.0; c];
                    let mut dbeta = vec![0.0; c];
                    // Per-channel Σ dxhat and Σ dxhat·xhat.
                    let mut s1 = vec![0.0; c];
                    let mut s2 = vec![0.0; c];
                    for bi in 0..b {
                        for ci in 0..c {
                            let off = (bi * c + ci) * l;
                            for i in off..off + l {
                                dgamma[ci] += g[i] * xhat[i];
                                dbeta[ci] += g[i];
                                let dh = g[i] * gam[ci];
                                s1[ci] += dh;
                                s2[ci] += dh * xhat[i];
                            }
                        }
                    }
                    if want(*input) {
                        let n = (b * l) as f64;
                        let mut dx = vec![0.0; g.len()];
                        for bi in 0..b {
                            for ci in 0..c {
                                let off = (bi * c + ci) * l;
                                for i in off..off + l {
                                    let dh = g[i] * gam[ci];
                                    dx[i] = if *batch_stats {
                                        inv_std[ci] * (dh - s1[ci] / n - xhat[i] * s2[ci] / n)
                                    } else {
                                        dh * inv_std[ci]
                                    };
                                }
                            }
                        }
                        push(*input, dx);
                    }
                    push(*gamma, dgamma);
                    push(*beta, dbeta);
                }
                Op::Dropout { input, mask } => {
                    push(*input, g.iter().zip(mask).map(|(g, m)| g * m).collect());
                }
                Op::Softmax(a) => {
                    let y = node.value.get();
                    let cols = y.shape()[1];
                    let mut dx = vec![0.0; g.len()];
                    for ((yr, gr), dr) in y.data().chunks_exact(cols).zip(g.chunks_exact(cols)).zip(dx.chunks_exact_mut(cols)) {
                        let dot: f64 = yr.iter().zip(gr).map(|(y, g)| y * g).sum();
                        for ((d, y), g) in dr.iter_mut().zip(yr).zip(gr) {
                            *d = y * (g - dot);
                        }
                    }
                    push(*a, dx);
                }
                Op::Focal { logits, grad } => {
                    push(*logits, grad.iter().map(|d| d * g[0]).collect());
                }
            }
        }
        Ok(())
    }
}
