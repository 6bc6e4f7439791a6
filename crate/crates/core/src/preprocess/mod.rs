//! Signal conditioning: wavelet denoising, running-median baseline removal
//! and clipped standardization, applied in that order.

mod wavelet;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use wavelet::{band_len, band_lengths, dwt, idwt, WaveletFamily, WaveletSpec, FILTER_LEN};

use crate::signal::Signal;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub wavelet: WaveletSpec,
    /// τ = threshold_scale · std(finest detail band).
    pub threshold_scale: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            wavelet: WaveletSpec::default(),
            threshold_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub denoise: DenoiseConfig,
    pub baseline_kernel: usize,
    pub standardize_eps: f64,
    pub clip_bound: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            denoise: DenoiseConfig::default(),
            baseline_kernel: 51,
            standardize_eps: 1e-8,
            clip_bound: 5.0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.denoise.threshold_scale > 0.0) {
            return Err(Error::Config("threshold_scale must be positive".into()));
        }
        if self.baseline_kernel < 3 || self.baseline_kernel % 2 == 0 {
            return Err(Error::Config(format!(
                "baseline kernel must be odd and at least 3, got {}",
                self.baseline_kernel
            )));
        }
        if !(self.standardize_eps > 0.0) || !(self.clip_bound > 0.0) {
            return Err(Error::Config("standardize_eps and clip_bound must be positive".into()));
        }
        Ok(())
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population (divide-by-N) standard deviation.
pub fn population_std(x: &[f64]) -> f64 {
    let m = mean(x);
    libm::sqrt(x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64)
}

pub fn soft_threshold(band: &[f64], tau: f64) -> Vec<f64> {
    band.iter()
        .map(|&c| {
            if c.abs() > tau {
                c.signum() * (c.abs() - tau)
            } else {
                0.0
            }
        })
        .collect()
}

/// Soft-thresholds every detail band with a threshold taken from the
/// finest one; the approximation band passes through untouched.
pub fn denoise(signal: &[f64], cfg: &DenoiseConfig) -> Result<Vec<f64>> {
    let mut bands = dwt(signal, &cfg.wavelet)?;
    let finest = bands.last().expect("level >= 1");
    let tau = cfg.threshold_scale * population_std(finest);
    for band in bands.iter_mut().skip(1) {
        *band = soft_threshold(band, tau);
    }
    idwt(&bands, &cfg.wavelet, signal.len())
}

/// Running median over a centered window of `kernel` samples, with the
/// edge values replicated outward so every window is full.
pub fn running_median(signal: &[f64], kernel: usize) -> Result<Vec<f64>> {
    let n = signal.len();
    if kernel == 0 || kernel % 2 == 0 {
        return Err(Error::Config(format!("median kernel must be odd, got {kernel}")));
    }
    if n == 0 || kernel > 2 * n - 1 {
        return Err(Error::Config(format!(
            "median kernel {kernel} too large for {n} samples (max {})",
            (2 * n).saturating_sub(1)
        )));
    }
    let half = kernel / 2;
    let at = |i: isize| signal[i.clamp(0, n as isize - 1) as usize];
    // Sorted window maintained incrementally.
    let mut window: Vec<f64> = (-(half as isize)..=half as isize).map(at).collect();
    window.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(n);
    out.push(window[half]);
    for i in 1..n as isize {
        let leaving = at(i - 1 - half as isize);
        let entering = at(i + half as isize);
        let pos = window.partition_point(|v| v.total_cmp(&leaving).is_lt());
        window.remove(pos);
        let pos = window.partition_point(|v| v.total_cmp(&entering).is_lt());
        window.insert(pos, entering);
        out.push(window[half]);
    }
    Ok(out)
}

pub fn remove_baseline(signal: &[f64], kernel: usize) -> Result<Vec<f64>> {
    let baseline = running_median(signal, kernel)?;
    Ok(signal.iter().zip(&baseline).map(|(s, b)| s - b).collect())
}

pub fn standardize(signal: &[f64], eps: f64, clip_bound: f64) -> Vec<f64> {
    let mu = mean(signal);
    let sigma = population_std(signal);
    signal
        .iter()
        .map(|v| ((v - mu) / (sigma + eps)).clamp(-clip_bound, clip_bound))
        .collect()
}

pub fn preprocess_samples(samples: &[f64], cfg: &PreprocessConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let denoised = denoise(samples, &cfg.denoise)?;
    let corrected = remove_baseline(&denoised, cfg.baseline_kernel)?;
    Ok(standardize(&corrected, cfg.standardize_eps, cfg.clip_bound))
}

pub fn preprocess_pipeline(signal: &Signal, cfg: &PreprocessConfig) -> Result<Signal> {
    signal.with_samples(preprocess_samples(signal.samples(), cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn brute_median(x: &[f64], kernel: usize) -> Vec<f64> {
        let n = x.len() as isize;
        let h = (kernel / 2) as isize;
        (0..n)
            .map(|i| {
                let mut w: Vec<f64> = (i - h..=i + h).map(|j| x[j.clamp(0, n - 1) as usize]).collect();
                w.sort_by(|a, b| a.partial_cmp(b).unwrap());
                w[w.len() / 2]
            })
            .collect()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0, -3.0, 0.5], 1.0), vec![2.0, -2.0, 0.0]);
        let band = [0.3, -1.7, 2.0];
        assert_eq!(soft_threshold(&band, 0.0), band.to_vec());
        assert_eq!(soft_threshold(&[0.0; 4], 2.5), vec![0.0; 4]);
    }

    #[test]
    fn baseline_hand_example() {
        assert_eq!(running_median(&[1.0, 100.0, 1.0], 3).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(remove_baseline(&[1.0, 100.0, 1.0], 3).unwrap(), vec![0.0, 99.0, 0.0]);
        assert_eq!(remove_baseline(&[4.2; 30], 51).unwrap(), vec![0.0; 30]);
    }

    #[test]
    fn baseline_kernel_errors() {
        assert!(matches!(remove_baseline(&[1.0; 10], 4), Err(Error::Config(_))));
        assert!(remove_baseline(&[1.0; 10], 21).is_err());
        assert!(remove_baseline(&[1.0; 10], 19).is_ok());
    }

    #[test]
    fn short_signal_uses_replication() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert_eq!(running_median(&x, 51).unwrap(), brute_median(&x, 51));
    }

    #[test]
    fn standardize_examples() {
        let out = standardize(&[1.0, 2.0, 3.0], 1e-8, 5.0);
        let z = 1.0 / libm::sqrt(2.0 / 3.0);
        assert!((out[0] + z).abs() < 1e-7 && out[1].abs() < 1e-12 && (out[2] - z).abs() < 1e-7);
        assert_eq!(standardize(&[3.0; 5], 1e-8, 5.0), vec![0.0; 5]);
        // One large outlier among many zeros standardizes to ~sqrt(n-1) > 5.
        let mut x = vec![0.0; 50];
        x[0] = 1.0;
        let out = standardize(&x, 1e-8, 5.0);
        assert_eq!(out[0], 5.0);
    }

    #[test]
    fn denoise_fixed_points() {
        let cfg = DenoiseConfig::default();
        let c = denoise(&[2.5; 64], &cfg).unwrap();
        assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-8));
        assert_eq!(denoise(&[0.0; 64], &cfg).unwrap().iter().map(|v| v.abs()).fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn denoise_reduces_rmse_over_seeds() {
        let cfg = DenoiseConfig::default();
        let n = 256;
        let clean: Vec<f64> = (0..n)
            .map(|i| libm::sin(2.0 * core::f64::consts::PI * 3.0 * i as f64 / n as f64))
            .collect();
        let noise = Normal::new(0.0, 0.1).unwrap();
        let rmse = |a: &[f64]| libm::sqrt(a.iter().zip(&clean).map(|(x, c)| (x - c).powi(2)).sum::<f64>() / n as f64);
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noisy: Vec<f64> = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();
            let out = denoise(&noisy, &cfg).unwrap();
            assert_eq!(out.len(), n);
            assert!(rmse(&out) < rmse(&noisy), "seed {seed}");
        }
    }

    #[test]
    fn pipeline_zero_signal_and_label() {
        let s = Signal::new(vec![0.0; 178], Some(1)).unwrap().with_source_id("x");
        let out = preprocess_pipeline(&s, &PreprocessConfig::default()).unwrap();
        assert!(out.samples().iter().all(|&v| v == 0.0));
        assert_eq!(out.label, Some(1));
        assert_eq!(out.source_id.as_deref(), Some("x"));
    }

    #[test]
    fn pipeline_config_validation() {
        let cfg = PreprocessConfig { baseline_kernel: 50, ..PreprocessConfig::default() };
        assert!(preprocess_samples(&[0.0; 178], &cfg).is_err());
        let cfg = PreprocessConfig { denoise: DenoiseConfig { threshold_scale: 0.0, ..DenoiseConfig::default() }, ..PreprocessConfig::default() };
        assert!(cfg.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn soft_threshold_contracts(band in proptest::collection::vec(-100.0f64..100.0, 0..64), tau in 0.0f64..50.0) {
            for (x, y) in band.iter().zip(soft_threshold(&band, tau)) {
                proptest::prop_assert!(y.abs() <= x.abs());
                proptest::prop_assert!(y == 0.0 || y.signum() == x.signum());
            }
        }

        #[test]
        fn median_matches_brute_force(
            x in proptest::collection::vec(-5.0f64..5.0, 2..=64),
            k in proptest::sample::select(vec![3usize, 5, 51]),
        ) {
            let k = if k > 2 * x.len() - 1 { (2 * x.len() - 1) | 1 } else { k };
            proptest::prop_assert_eq!(running_median(&x, k).unwrap(), brute_median(&x, k));
        }

        #[test]
        fn standardize_affine_invariant(
            x in proptest::collection::vec(-3.0f64..3.0, 4..100),
            a in 0.1f64..10.0,
            b in -10.0f64..10.0,
        ) {
            proptest::prop_assume!(population_std(&x) > 1e-3);
            // eps shifts the result by ~eps/σ; shrink it so only the affine
            // law is under test.
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let (p, q) = (standardize(&x, 1e-15, 5.0), standardize(&y, 1e-15, 5.0));
            for (u, v) in p.iter().zip(&q) {
                proptest::prop_assert!((u - v).abs() < 1e-10);
            }
        }

        #[test]
        fn pipeline_output_bounded(x in proptest::collection::vec(-1e3f64..1e3, 178)) {
            let out = preprocess_samples(&x, &PreprocessConfig::default()).unwrap();
            proptest::prop_assert_eq!(out.len(), 178);
            proptest::prop_assert!(out.iter().all(|v| v.abs() <= 5.0));
        }

        #[test]
        fn standardize_moments(x in proptest::collection::vec(-1.0f64..1.0, 8..200)) {
            proptest::prop_assume!(population_std(&x) > 1e-2);
            let out = standardize(&x, 1e-8, f64::INFINITY);
            proptest::prop_assert!(mean(&out).abs() < 1e-10);
            proptest::prop_assert!((population_std(&out) - 1.0).abs() < 1e-6);
        }
    }
}
