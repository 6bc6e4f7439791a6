//! Seven-variant augmentation joined end to end into one training input.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub noise_std: f64,
    pub scale_factor: f64,
    pub shift_amount: i64,
    pub warp_factor: f64,
    pub cutout_segments: usize,
    pub cutout_length: usize,
    pub jitter_std: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            noise_std: 0.01,
            scale_factor: 1.2,
            shift_amount: 10,
            warp_factor: 0.2,
            cutout_segments: 2,
            cutout_length: 50,
            jitter_std: 0.05,
            seed: 42,
        }
    }
}

impl AugmentConfig {
    /// Every variant reduces to the identity.
    pub fn identity() -> Self {
        Self {
            noise_std: 0.0,
            scale_factor: 1.0,
            shift_amount: 0,
            warp_factor: 0.0,
            cutout_segments: 0,
            cutout_length: 1,
            jitter_std: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self, signal_len: usize) -> Result<()> {
        if !(self.noise_std >= 0.0) || !(self.jitter_std >= 0.0) {
            return Err(Error::Config("noise and jitter std must be non-negative".into()));
        }
        if !(0.0..2.0).contains(&self.warp_factor) {
            return Err(Error::Config(format!(
                "warp factor must lie in [0, 2), got {}",
                self.warp_factor
            )));
        }
        if !self.scale_factor.is_finite() {
            return Err(Error::Config("scale factor must be finite".into()));
        }
        if self.cutout_length == 0 || self.cutout_length > signal_len {
            return Err(Error::Config(format!(
                "cutout length {} must lie in 1..={signal_len}",
                self.cutout_length
            )));
        }
        Ok(())
    }

    /// Same parameters, seed re-derived for one training epoch.
    pub fn for_epoch(&self, epoch: usize) -> Self {
        Self {
            seed: seed::derive(self.seed, &[0xE90C, epoch as u64]),
            ..self.clone()
        }
    }
}

/// Concatenation order of the variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantKind {
    Original,
    Noisy,
    Scaled,
    Shifted,
    TimeWarped,
    Cutout,
    Jittered,
}

impl VariantKind {
    pub const ORDER: [VariantKind; 7] = [
        VariantKind::Original,
        VariantKind::Noisy,
        VariantKind::Scaled,
        VariantKind::Shifted,
        VariantKind::TimeWarped,
        VariantKind::Cutout,
        VariantKind::Jittered,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

pub const NUM_VARIANTS: usize = VariantKind::ORDER.len();

/// Independent generator for one variant of one sample.
pub fn variant_rng(cfg_seed: u64, variant: VariantKind, sample_key: u64) -> ChaCha8Rng {
    seed::rng(cfg_seed, &[variant.index() as u64, sample_key])
}

fn gaussian(s: &[f64], std: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if std == 0.0 {
        return s.to_vec();
    }
    // `std` was validated as finite and non-negative.
    let dist = Normal::new(0.0, std).expect("valid std");
    s.iter().map(|v| v + dist.sample(rng)).collect()
}

pub fn add_noise(s: &[f64], std: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    gaussian(s, std, rng)
}

pub fn scale(s: &[f64], factor: f64) -> Vec<f64> {
    s.iter().map(|v| factor * v).collect()
}

/// `out[n] = s[(n - amount) mod N]`.
pub fn circular_shift(s: &[f64], amount: i64) -> Vec<f64> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let k = amount.rem_euclid(n as i64) as usize;
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&s[n - k..]);
    out.extend_from_slice(&s[..n - k]);
    out
}

/// Starts from a copy of `s` and writes `s[i]` to `round(i·(1 + w·rᵢ))`,
/// `rᵢ ~ U(-0.5, 0.5)`, clipped into range. Later writes win.
pub fn time_warp(s: &[f64], warp_factor: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = s.len();
    let mut out = s.to_vec();
    for (i, &v) in s.iter().enumerate() {
        let r: f64 = rng.random_range(-0.5..0.5);
        let t = libm::round(i as f64 * (1.0 + warp_factor * r));
        let t = t.clamp(0.0, (n - 1) as f64) as usize;
        out[t] = v;
    }
    out
}

pub fn cutout(s: &[f64], n_segments: usize, seg_length: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = s.len();
    if seg_length == 0 || seg_length > n {
        return Err(Error::Config(format!(
            "cutout length {seg_length} must lie in 1..={n}"
        )));
    }
    let mut out = s.to_vec();
    for _ in 0..n_segments {
        let start = rng.random_range(0..=n - seg_length);
        out[start..start + seg_length].iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(out)
}

pub fn amplitude_jitter(s: &[f64], std: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    gaussian(s, std, rng)
}

/// One variant of `s`, drawing from that variant's own stream.
pub fn variant(s: &[f64], kind: VariantKind, cfg: &AugmentConfig, sample_key: u64) -> Result<Vec<f64>> {
    let mut rng = variant_rng(cfg.seed, kind, sample_key);
    Ok(match kind {
        VariantKind::Original => s.to_vec(),
        VariantKind::Noisy => add_noise(s, cfg.noise_std, &mut rng),
        VariantKind::Scaled => scale(s, cfg.scale_factor),
        VariantKind::Shifted => circular_shift(s, cfg.shift_amount),
        VariantKind::TimeWarped => time_warp(s, cfg.warp_factor, &mut rng),
        VariantKind::Cutout => cutout(s, cfg.cutout_segments, cfg.cutout_length, &mut rng)?,
        VariantKind::Jittered => amplitude_jitter(s, cfg.jitter_std, &mut rng),
    })
}

/// `[orig, noisy, scaled, shifted, warped, cutout, jitter]`, length `7·N`.
pub fn build_concatenated_keyed(s: &[f64], cfg: &AugmentConfig, sample_key: u64) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::Signal("cannot augment an empty signal".into()));
    }
    cfg.validate(s.len())?;
    let mut out = Vec::with_capacity(NUM_VARIANTS * s.len());
    for kind in VariantKind::ORDER {
        out.extend(variant(s, kind, cfg, sample_key)?);
    }
    Ok(out)
}

pub fn build_concatenated(s: &[f64], cfg: &AugmentConfig) -> Result<Vec<f64>> {
    build_concatenated_keyed(s, cfg, 0)
}

/// Stream key of a sample: its id hash when it has one, else its position.
pub fn sample_key(source_id: Option<&str>, index: usize) -> u64 {
    match source_id {
        Some(id) => seed::hash_str(id),
        None => index as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sample_std(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        libm::sqrt(x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64)
    }

    #[test]
    fn noise_and_jitter_statistics() {
        let s = vec![0.5; 10_000];
        let noisy = add_noise(&s, 0.01, &mut rng(1));
        let d: Vec<f64> = noisy.iter().zip(&s).map(|(a, b)| a - b).collect();
        let sd = sample_std(&d);
        assert!((0.008..=0.012).contains(&sd), "{sd}");
        let jit = amplitude_jitter(&s, 0.05, &mut rng(2));
        let d: Vec<f64> = jit.iter().zip(&s).map(|(a, b)| a - b).collect();
        let sd = sample_std(&d);
        assert!((0.045..=0.055).contains(&sd), "{sd}");
        assert_eq!(add_noise(&s, 0.0, &mut rng(1)), s);
        assert_eq!(amplitude_jitter(&s, 0.0, &mut rng(1)), s);
        assert_eq!(add_noise(&s, 0.01, &mut rng(9)), add_noise(&s, 0.01, &mut rng(9)));
    }

    #[test]
    fn noise_and_jitter_streams_differ() {
        let s = vec![0.0; 64];
        let cfg = AugmentConfig { noise_std: 0.05, jitter_std: 0.05, ..AugmentConfig::default() };
        let a = variant(&s, VariantKind::Noisy, &cfg, 3).unwrap();
        let b = variant(&s, VariantKind::Jittered, &cfg, 3).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn scale_and_shift_examples() {
        assert_eq!(scale(&[1.0, 2.0], 1.2), vec![1.2, 2.4]);
        assert_eq!(scale(&[1.0, -2.0], 1.0), vec![1.0, -2.0]);
        assert_eq!(scale(&[0.0; 3], 1.2), vec![0.0; 3]);
        assert_eq!(circular_shift(&[1.0, 2.0, 3.0, 4.0], 10), vec![3.0, 4.0, 1.0, 2.0]);
        assert_eq!(circular_shift(&[1.0, 2.0, 3.0], 0), vec![1.0, 2.0, 3.0]);
        assert_eq!(circular_shift(&[1.0, 2.0, 3.0], 3), vec![1.0, 2.0, 3.0]);
        assert_eq!(circular_shift(&[1.0, 2.0, 3.0], -1), vec![2.0, 3.0, 1.0]);
    }

    #[test]
    fn time_warp_matches_index_oracle() {
        let s: Vec<f64> = (0..16).map(|i| (i * i) as f64).collect();
        let got = time_warp(&s, 0.2, &mut rng(77));
        // Independent restatement of the index rule on the same stream.
        let mut r = rng(77);
        let mut want = s.clone();
        for i in 0..16 {
            let u: f64 = r.random_range(-0.5..0.5);
            let t = (i as f64 * (1.0 + 0.2 * u)).round();
            let t = if t < 0.0 { 0 } else if t > 15.0 { 15 } else { t as usize };
            want[t] = s[i];
        }
        assert_eq!(got, want);
        assert_eq!(time_warp(&s, 0.0, &mut rng(1)), s);
    }

    #[test]
    fn cutout_trace_and_bounds() {
        let s = [1.0, 2.0, 3.0, 4.0];
        let seed = (0..1000)
            .find(|&k| rng(k).random_range(0..=2usize) == 0)
            .expect("some seed starts at 0");
        assert_eq!(cutout(&s, 1, 2, &mut rng(seed)).unwrap(), vec![0.0, 0.0, 3.0, 4.0]);
        assert_eq!(cutout(&s, 0, 2, &mut rng(1)).unwrap(), s.to_vec());
        assert!(matches!(cutout(&s, 1, 5, &mut rng(1)), Err(Error::Config(_))));
        let long: Vec<f64> = (1..=200).map(f64::from).collect();
        let out = cutout(&long, 3, 20, &mut rng(4)).unwrap();
        assert!(out.iter().filter(|&&v| v == 0.0).count() <= 60);
    }

    #[test]
    fn concatenation_length_and_identity() {
        let s: Vec<f64> = (0..178).map(|i| libm::sin(i as f64 * 0.1)).collect();
        assert_eq!(build_concatenated(&s, &AugmentConfig::default()).unwrap().len(), 1246);
        let out = build_concatenated(&s, &AugmentConfig::identity()).unwrap();
        for k in 0..NUM_VARIANTS {
            assert_eq!(&out[k * 178..(k + 1) * 178], &s[..]);
        }
    }

    #[test]
    fn scaled_segment_equals_standalone() {
        let s: Vec<f64> = (0..128).map(|i| i as f64 / 7.0).collect();
        let out = build_concatenated(&s, &AugmentConfig::default()).unwrap();
        assert_eq!(&out[2 * 128..3 * 128], &scale(&s, 1.2)[..]);
    }

    #[test]
    fn short_signal_with_default_cutout_fails() {
        assert!(matches!(
            build_concatenated(&[0.0; 40], &AugmentConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn epoch_seeds_differ() {
        let cfg = AugmentConfig::default();
        assert_ne!(cfg.for_epoch(1).seed, cfg.for_epoch(2).seed);
        assert_eq!(cfg.for_epoch(3), cfg.for_epoch(3));
    }

    proptest::proptest! {
        #[test]
        fn warp_only_moves_existing_values(
            s in proptest::collection::vec(-10.0f64..10.0, 1..100),
            w in 0.0f64..1.99,
            seed in 0u64..1000,
        ) {
            let out = time_warp(&s, w, &mut rng(seed));
            proptest::prop_assert!(out.iter().all(|v| s.contains(v)));
        }

        #[test]
        fn shift_inverse(s in proptest::collection::vec(-10.0f64..10.0, 1..50), a in -200i64..200) {
            proptest::prop_assert_eq!(circular_shift(&circular_shift(&s, a), -a), s);
        }
    }
}
