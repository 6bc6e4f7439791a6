#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigcat_core::model::{LayerSpec, ModelConfig, StemConfig};
use sigcat_core::signal::{generate_synthetic, stratified_split, Dataset, SplitSpec, SynthSpec};
use sigcat_core::tensor::Tensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// A narrow network that keeps every stage type.
pub fn tiny_model(classes: usize) -> ModelConfig {
    ModelConfig {
        num_classes: classes,
        stem: StemConfig {
            channels: 4,
            ..StemConfig::default()
        },
        layers: vec![
            LayerSpec {
                out_channels: 8,
                num_blocks: 1,
                first_stride: 2,
            },
            LayerSpec {
                out_channels: 8,
                num_blocks: 1,
                first_stride: 2,
            },
        ],
        attention_divisor: 4,
        hidden: 8,
        ..ModelConfig::default()
    }
}

pub fn sine_dataset(per_class: usize, length: usize, seed: u64) -> Dataset {
    let spec = SynthSpec {
        num_per_class: per_class,
        length,
        class_freqs: vec![3.0, 7.0],
        noise_std: 0.05,
        seed,
    };
    stratified_split(&generate_synthetic(&spec).unwrap(), &SplitSpec::default()).unwrap()
}
