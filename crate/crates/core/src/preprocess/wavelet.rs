//! Multi-level Daubechies-4 DWT with half-sample symmetric extension.
//!
//! One analysis level maps an input of length `n` to two bands of length
//! `(n + F - 1) / 2` (`F` = 8 taps):
//!
//! ```text
//! band[o] = Σ_j filter[j] · x̃[2o + 1 - j]
//! ```
//!
//! where `x̃` is the symmetric extension of `x`. The analysis rows of an
//! orthonormal filter pair are orthonormal, so synthesis is the transpose,
//! and every output sample only needs band entries that analysis produced.
//! That gives exact reconstruction for any input length.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Daubechies-4 (8-tap, four vanishing moments) decomposition lowpass.
const DB4_DEC_LO: [f64; 8] = [
    -0.010_597_401_784_997_278,
    0.032_883_011_666_982_945,
    0.030_841_381_835_986_965,
    -0.187_034_811_718_881_14,
    -0.027_983_769_416_983_85,
    0.630_880_767_929_590_4,
    0.714_846_570_552_541_5,
    0.230_377_813_308_855_23,
];

pub const FILTER_LEN: usize = DB4_DEC_LO.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WaveletFamily {
    #[default]
    #[serde(rename = "db4")]
    Db4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    pub level: usize,
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self {
            family: WaveletFamily::Db4,
            level: 4,
        }
    }
}

impl WaveletSpec {
    pub fn db4(level: usize) -> Self {
        Self {
            family: WaveletFamily::Db4,
            level,
        }
    }

    pub fn lowpass(&self) -> [f64; FILTER_LEN] {
        DB4_DEC_LO
    }

    /// Quadrature mirror of the lowpass: `hi[k] = (-1)^(k+1) lo[F-1-k]`.
    pub fn highpass(&self) -> [f64; FILTER_LEN] {
        let lo = self.lowpass();
        core::array::from_fn(|k| {
            let v = lo[FILTER_LEN - 1 - k];
            if k % 2 == 0 {
                -v
            } else {
                v
            }
        })
    }

    /// Deepest level for which every level's input still spans the filter.
    pub fn max_level(len: usize) -> usize {
        let mut n = len;
        let mut level = 0;
        while n >= FILTER_LEN {
            level += 1;
            n = band_len(n);
        }
        level
    }

    pub fn check_admissible(&self, len: usize) -> Result<()> {
        let max_level = Self::max_level(len);
        if self.level == 0 || self.level > max_level {
            return Err(Error::Decomposition {
                len,
                level: self.level,
                max_level,
            });
        }
        Ok(())
    }
}

pub fn band_len(input_len: usize) -> usize {
    (input_len + FILTER_LEN - 1) / 2
}

/// Half-sample symmetric extension index: `x[-1] = x[0]`, `x[n] = x[n-1]`.
/// Reflects repeatedly for very short inputs.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

fn analyze(x: &[f64], lo: &[f64; FILTER_LEN], hi: &[f64; FILTER_LEN]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let out_len = band_len(n);
    let mut approx = vec![0.0; out_len];
    let mut detail = vec![0.0; out_len];
    for o in 0..out_len {
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..FILTER_LEN {
            let idx = 2 * o as isize + 1 - j as isize;
            let v = if idx >= 0 && (idx as usize) < n {
                x[idx as usize]
            } else {
                x[reflect(idx, n)]
            };
            a += lo[j] * v;
            d += hi[j] * v;
        }
        approx[o] = a;
        detail[o] = d;
    }
    (approx, detail)
}

fn synthesize(
    approx: &[f64],
    detail: &[f64],
    lo: &[f64; FILTER_LEN],
    hi: &[f64; FILTER_LEN],
    out_len: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; out_len];
    for (m, y) in out.iter_mut().enumerate() {
        // 0 <= 2o + 1 - m <= F - 1
        let o_min = m.saturating_sub(1).div_ceil(2);
        let o_max = ((m + FILTER_LEN - 2) / 2).min(approx.len() - 1);
        let mut acc = 0.0;
        for o in o_min..=o_max {
            let j = 2 * o + 1 - m;
            acc += approx[o] * lo[j] + detail[o] * hi[j];
        }
        *y = acc;
    }
    out
}

/// Decomposes into `[cA_L, cD_L, ..., cD_1]`, coarse to fine.
pub fn dwt(signal: &[f64], spec: &WaveletSpec) -> Result<Vec<Vec<f64>>> {
    spec.check_admissible(signal.len())?;
    let (lo, hi) = (spec.lowpass(), spec.highpass());
    let mut details = Vec::with_capacity(spec.level);
    let mut approx = signal.to_vec();
    for _ in 0..spec.level {
        let (a, d) = analyze(&approx, &lo, &hi);
        details.push(d);
        approx = a;
    }
    let mut bands = Vec::with_capacity(spec.level + 1);
    bands.push(approx);
    bands.extend(details.into_iter().rev());
    Ok(bands)
}

/// Band lengths a decomposition of `len` samples produces, coarse to fine.
pub fn band_lengths(len: usize, level: usize) -> Vec<usize> {
    let mut lens = Vec::with_capacity(level);
    let mut n = len;
    for _ in 0..level {
        n = band_len(n);
        lens.push(n);
    }
    let mut out = vec![n];
    out.extend(lens.into_iter().rev());
    out
}

pub fn idwt(bands: &[Vec<f64>], spec: &WaveletSpec, target_length: usize) -> Result<Vec<f64>> {
    spec.check_admissible(target_length)
        .map_err(|e| Error::Reconstruction(format!("{e}")))?;
    let expect = band_lengths(target_length, spec.level);
    let got: Vec<usize> = bands.iter().map(Vec::len).collect();
    if got != expect {
        return Err(Error::Reconstruction(format!(
            "band lengths {got:?} do not match a level-{} decomposition of {target_length} samples (expected {expect:?})",
            spec.level
        )));
    }
    // Input length of each analysis level, finest first.
    let mut input_lens = Vec::with_capacity(spec.level);
    let mut n = target_length;
    for _ in 0..spec.level {
        input_lens.push(n);
        n = band_len(n);
    }
    let (lo, hi) = (spec.lowpass(), spec.highpass());
    let mut approx = bands[0].clone();
    for (detail, &out_len) in bands[1..].iter().zip(input_lens.iter().rev()) {
        approx = synthesize(&approx, detail, &lo, &hi, out_len);
    }
    Ok(approx)
}
