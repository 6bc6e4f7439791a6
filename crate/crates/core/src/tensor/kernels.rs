//! Slice-level forward and backward kernels shared by the autodiff graph
//! and the gradient-free inference path.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `c = a·b + beta·c` for strided row/column layouts.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (usize, usize),
    b: &[f64],
    b_strides: (usize, usize),
    beta: f64,
    c: &mut [f64],
    c_strides: (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    let last = |rows: usize, cols: usize, (rs, cs): (usize, usize)| (rows - 1) * rs + (cols - 1) * cs;
    if k > 0 {
        assert!(last(m, k, a_strides) < a.len() && last(k, n, b_strides) < b.len());
    }
    assert!(last(m, n, c_strides) < c.len());
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            beta,
            c.as_mut_ptr(),
            c_strides.0 as isize,
            c_strides.1 as isize,
        );
    }
}

/// Output length of a sliding window: `floor((len + 2p - k) / s) + 1`.
pub fn window_out_len(len: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 || kernel == 0 {
        return Err(Error::Shape("kernel and stride must be positive".into()));
    }
    let padded = len + 2 * padding;
    if padded < kernel {
        return Err(Error::Shape(format!(
            "window of {kernel} exceeds padded length {padded}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub batch: usize,
    pub in_ch: usize,
    pub len: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_len: usize,
}

impl ConvGeom {
    pub fn new(
        input: &[usize],
        weight: &[usize],
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        let [batch, in_ch, len] = dims3(input)?;
        let [out_ch, w_in, kernel] = dims3(weight)?;
        if w_in != in_ch {
            return Err(Error::Shape(format!(
                "conv expects {w_in} input channels, got {in_ch}"
            )));
        }
        let out_len = window_out_len(len, kernel, stride, padding)?;
        Ok(Self {
            batch,
            in_ch,
            len,
            out_ch,
            kernel,
            stride,
            padding,
            out_len,
        })
    }

    fn patch(&self) -> usize {
        self.in_ch * self.kernel
    }

    fn columns(&self) -> usize {
        self.batch * self.out_len
    }
}

pub(crate) fn dims3(shape: &[usize]) -> Result<[usize; 3]> {
    match shape {
        &[a, b, c] => Ok([a, b, c]),
        _ => Err(Error::Shape(format!("expected a rank-3 tensor, got shape {shape:?}"))),
    }
}

pub(crate) fn dims2(shape: &[usize]) -> Result<[usize; 2]> {
    match shape {
        &[a, b] => Ok([a, b]),
        _ => Err(Error::Shape(format!("expected a rank-2 tensor, got shape {shape:?}"))),
    }
}

/// Unfolds `x` into `[in_ch·kernel, batch·out_len]` patch columns.
fn im2col(x: &[f64], g: &ConvGeom) -> Vec<f64> {
    let cols = g.columns();
    let mut out = vec![0.0; g.patch() * cols];
    for ci in 0..g.in_ch {
        for k in 0..g.kernel {
            let row = &mut out[(ci * g.kernel + k) * cols..][..cols];
            for b in 0..g.batch {
                let src = &x[(b * g.in_ch + ci) * g.len..][..g.len];
                let dst = &mut row[b * g.out_len..][..g.out_len];
                for (t, d) in dst.iter_mut().enumerate() {
                    let pos = (t * g.stride + k) as isize - g.padding as isize;
                    if pos >= 0 && (pos as usize) < g.len {
                        *d = src[pos as usize];
                    }
                }
            }
        }
    }
    out
}

fn col2im(cols: &[f64], g: &ConvGeom) -> Vec<f64> {
    let n = g.columns();
    let mut dx = vec![0.0; g.batch * g.in_ch * g.len];
    for ci in 0..g.in_ch {
        for k in 0..g.kernel {
            let row = &cols[(ci * g.kernel + k) * n..][..n];
            for b in 0..g.batch {
                let dst = &mut dx[(b * g.in_ch + ci) * g.len..][..g.len];
                for (t, v) in row[b * g.out_len..][..g.out_len].iter().enumerate() {
                    let pos = (t * g.stride + k) as isize - g.padding as isize;
                    if pos >= 0 && (pos as usize) < g.len {
                        dst[pos as usize] += v;
                    }
                }
            }
        }
    }
    dx
}

/// Cross-correlation with zero padding: `[B, Cin, L] -> [B, Cout, Lout]`.
pub fn conv1d_forward(x: &[f64], weight: &[f64], bias: Option<&[f64]>, g: &ConvGeom) -> Vec<f64> {
    let cols = im2col(x, g);
    let n = g.columns();
    let mut y = vec![0.0; g.out_ch * n];
    gemm(g.out_ch, g.patch(), n, weight, (g.patch(), 1), &cols, (n, 1), 0.0, &mut y, (n, 1));
    let mut out = vec![0.0; g.batch * g.out_ch * g.out_len];
    for co in 0..g.out_ch {
        let b_co = bias.map_or(0.0, |b| b[co]);
        for b in 0..g.batch {
            let src = &y[co * n + b * g.out_len..][..g.out_len];
            let dst = &mut out[(b * g.out_ch + co) * g.out_len..][..g.out_len];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s + b_co;
            }
        }
    }
    out
}

pub struct ConvGrads {
    pub input: Option<Vec<f64>>,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn conv1d_backward(x: &[f64], weight: &[f64], grad_out: &[f64], g: &ConvGeom, need_input: bool) -> ConvGrads {
    let n = g.columns();
    // [Cout, B·Lout] view of the upstream gradient.
    let mut dy = vec![0.0; g.out_ch * n];
    let mut db = vec![0.0; g.out_ch];
    for b in 0..g.batch {
        for co in 0..g.out_ch {
            let src = &grad_out[(b * g.out_ch + co) * g.out_len..][..g.out_len];
            dy[co * n + b * g.out_len..][..g.out_len].copy_from_slice(src);
            db[co] += src.iter().sum::<f64>();
        }
    }
    let cols = im2col(x, g);
    let p = g.patch();
    let mut dw = vec![0.0; g.out_ch * p];
    gemm(g.out_ch, n, p, &dy, (n, 1), &cols, (1, n), 0.0, &mut dw, (p, 1));
    let input = need_input.then(|| {
        let mut dcols = cols;
        gemm(p, g.out_ch, n, weight, (1, p), &dy, (n, 1), 0.0, &mut dcols, (n, 1));
        col2im(&dcols, g)
    });
    ConvGrads {
        input,
        weight: dw,
        bias: db,
    }
}

/// Max pooling over the last axis of `[rows, len]`; padding acts as -∞.
/// Returns outputs and the flat input index that won each window.
pub fn maxpool1d_forward(
    x: &[f64],
    rows: usize,
    len: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<(Vec<f64>, Vec<usize>, usize)> {
    if padding >= kernel {
        return Err(Error::Shape(format!(
            "pool padding {padding} must be smaller than the kernel {kernel}"
        )));
    }
    let out_len = window_out_len(len, kernel, stride, padding)?;
    let mut out = Vec::with_capacity(rows * out_len);
    let mut arg = Vec::with_capacity(rows * out_len);
    for r in 0..rows {
        let row = &x[r * len..][..len];
        for t in 0..out_len {
            let start = (t * stride) as isize - padding as isize;
            let lo = start.max(0) as usize;
            let hi = ((start + kernel as isize) as usize).min(len);
            let mut best = lo;
            for i in lo + 1..hi {
                if row[i] > row[best] {
                    best = i;
                }
            }
            out.push(row[best]);
            arg.push(r * len + best);
        }
    }
    Ok((out, arg, out_len))
}

/// Per-channel statistics over `(batch, len)` of a `[B, C, L]` buffer.
pub fn channel_moments(x: &[f64], batch: usize, ch: usize, len: usize) -> (Vec<f64>, Vec<f64>) {
    let count = (batch * len) as f64;
    let mut mean = vec![0.0; ch];
    let mut var = vec![0.0; ch];
    for c in 0..ch {
        let mut s = 0.0;
        for b in 0..batch {
            s += x[(b * ch + c) * len..][..len].iter().sum::<f64>();
        }
        let m = s / count;
        let mut q = 0.0;
        for b in 0..batch {
            q += x[(b * ch + c) * len..][..len].iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        }
        mean[c] = m;
        var[c] = q / count;
    }
    (mean, var)
}

/// `y = gamma·(x - mean)·inv_std + beta` per channel; returns `(y, xhat)`.
pub fn normalize(
    x: &[f64],
    [batch, ch, len]: [usize; 3],
    mean: &[f64],
    inv_std: &[f64],
    gamma: &[f64],
    beta: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    for b in 0..batch {
        for c in 0..ch {
            let off = (b * ch + c) * len;
            for i in off..off + len {
                let h = (x[i] - mean[c]) * inv_std[c];
                xhat[i] = h;
                y[i] = gamma[c] * h + beta[c];
            }
        }
    }
    (y, xhat)
}

/// `[B, in] · Wᵀ + b` with `W: [out, in]`.
pub fn linear_forward(x: &[f64], batch: usize, in_f: usize, weight: &[f64], bias: &[f64], out_f: usize) -> Vec<f64> {
    let mut y = vec![0.0; batch * out_f];
    for row in y.chunks_exact_mut(out_f) {
        row.copy_from_slice(bias);
    }
    gemm(batch, in_f, out_f, x, (in_f, 1), weight, (1, in_f), 1.0, &mut y, (out_f, 1));
    y
}

/// Row-wise softmax of `[rows, cols]`.
pub fn softmax_rows(x: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (src, dst) in x.chunks_exact(cols).zip(out.chunks_exact_mut(cols)) {
        let max = src.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (d, s) in dst.iter_mut().zip(src) {
            *d = libm::exp(s - max);
            sum += *d;
        }
        dst.iter_mut().for_each(|d| *d /= sum);
    }
    out
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}
