use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};
use super::kernels::{self, ConvGeom};
use super::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Train,
    Eval,
}

fn he_normal<R: Rng>(shape: Vec<usize>, fan_in: usize, rng: &mut R) -> Tensor {
    let normal = Normal::new(0.0, libm::sqrt(2.0 / fan_in as f64)).expect("positive std");
    let n = shape.iter().product();
    let data = (0..n).map(|_| normal.sample(rng)).collect();
    Tensor::new(shape, data).expect("shape matches").tracked()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dLayer {
    /// `[out_channels, in_channels, kernel]`.
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub padding: usize,
}

impl Conv1dLayer {
    pub fn new<R: Rng>(
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if in_ch == 0 || out_ch == 0 || kernel == 0 || stride == 0 {
            return Err(Error::Config("conv channels, kernel and stride must be positive".into()));
        }
        Ok(Self {
            weight: he_normal(vec![out_ch, in_ch, kernel], in_ch * kernel, rng),
            bias: Tensor::zeros([out_ch]).tracked(),
            stride,
            padding,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }

    pub fn forward<'a>(&'a mut self, g: &mut Graph<'a>, x: Var) -> Result<Var> {
        let w = g.bind(&mut self.weight);
        let b = g.bind(&mut self.bias);
        g.conv1d(x, w, Some(b), self.stride, self.padding)
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let geom = ConvGeom::new(x.shape(), self.weight.shape(), self.stride, self.padding)?;
        let out = kernels::conv1d_forward(x.data(), self.weight.data(), Some(self.bias.data()), &geom);
        Tensor::new([geom.batch, geom.out_ch, geom.out_len], out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    /// Updated with the unbiased batch variance.
    pub running_var: Tensor,
    pub eps: f64,
    pub momentum: f64,
}

impl BatchNormLayer {
    pub const EPS: f64 = 1e-5;
    pub const MOMENTUM: f64 = 0.1;

    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::full([channels], 1.0).tracked(),
            beta: Tensor::zeros([channels]).tracked(),
            running_mean: Tensor::zeros([channels]),
            running_var: Tensor::full([channels], 1.0),
            eps: Self::EPS,
            momentum: Self::MOMENTUM,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.numel()
    }

    /// Train mode normalizes with batch statistics and folds them into
    /// the running estimates; eval mode uses the running estimates.
    pub fn forward<'a>(&'a mut self, g: &mut Graph<'a>, x: Var, mode: Mode) -> Result<Var> {
        let Self {
            gamma,
            beta,
            running_mean,
            running_var,
            eps,
            momentum,
        } = self;
        let gv = g.bind(gamma);
        let bv = g.bind(beta);
        match mode {
            Mode::Eval => g.batch_norm_fixed(x, gv, bv, running_mean.data(), running_var.data(), *eps),
            Mode::Train => {
                let (y, stats) = g.batch_norm_train(x, gv, bv, *eps)?;
                let n = stats.count as f64;
                let m = *momentum;
                for (r, &b) in running_mean.data_mut().iter_mut().zip(&stats.mean) {
                    *r = (1.0 - m) * *r + m * b;
                }
                for (r, &v) in running_var.data_mut().iter_mut().zip(&stats.var) {
                    *r = (1.0 - m) * *r + m * v * n / (n - 1.0);
                }
                Ok(y)
            }
        }
    }

    /// Eval-mode normalization without a graph.
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let dims = kernels::dims3(x.shape())?;
        if dims[1] != self.channels() {
            return Err(Error::Shape(format!(
                "batch norm over {} channels applied to {:?}",
                self.channels(),
                x.shape()
            )));
        }
        let inv_std: Vec<f64> = self.running_var.data().iter().map(|v| 1.0 / libm::sqrt(v + self.eps)).collect();
        let (y, _) = kernels::normalize(
            x.data(),
            dims,
            self.running_mean.data(),
            &inv_std,
            self.gamma.data(),
            self.beta.data(),
        );
        Tensor::new(x.shape().to_vec(), y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    /// `[out_features, in_features]`.
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LinearLayer {
    pub fn new<R: Rng>(in_f: usize, out_f: usize, rng: &mut R) -> Result<Self> {
        if in_f == 0 || out_f == 0 {
            return Err(Error::Config("linear layer sizes must be positive".into()));
        }
        Ok(Self {
            weight: he_normal(vec![out_f, in_f], in_f, rng),
            bias: Tensor::zeros([out_f]).tracked(),
        })
    }

    pub fn forward<'a>(&'a mut self, g: &mut Graph<'a>, x: Var) -> Result<Var> {
        let w = g.bind(&mut self.weight);
        let b = g.bind(&mut self.bias);
        g.linear(x, w, b)
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let [batch, in_f] = kernels::dims2(x.shape())?;
        let [out_f, w_in] = kernels::dims2(self.weight.shape())?;
        if in_f != w_in {
            return Err(Error::Shape(format!(
                "linear layer expects {w_in} features, got {in_f}"
            )));
        }
        let y = kernels::linear_forward(x.data(), batch, in_f, self.weight.data(), self.bias.data(), out_f);
        Tensor::new([batch, out_f], y)
    }
}
