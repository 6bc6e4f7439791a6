//! Inference timing and the analytic memory estimate.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use sigcat_core::model::ModelParams;
use sigcat_core::tensor::Tensor;
use sigcat_core::train::MemoryEstimate;

use crate::{Error, Result};

pub const MIN_REPETITIONS: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub parameters: usize,
    pub memory: MemoryEstimate,
    pub megabytes_per_model: f64,
    pub megabytes_ensemble: f64,
    pub input_length: usize,
    pub warmup: usize,
    pub repetitions: usize,
    /// Median single-sample eval-mode forward time.
    pub latency_seconds: f64,
    pub throughput_per_second: f64,
    pub hardware: String,
}

fn hardware() -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{}, {threads} hardware threads, single-threaded inference",
        std::env::consts::ARCH,
        std::env::consts::OS
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times `repetitions` batch-of-one forwards after `warmup` untimed ones.
pub fn bench(
    model: &ModelParams,
    input_length: usize,
    repetitions: usize,
    warmup: usize,
    ensemble_size: usize,
) -> Result<BenchReport> {
    if repetitions < MIN_REPETITIONS {
        return Err(Error::Usage(format!(
            "bench needs at least {MIN_REPETITIONS} repetitions, got {repetitions}"
        )));
    }
    let c = model.config().in_channels;
    let data = (0..c * input_length)
        .map(|i| (std::f64::consts::TAU * 5.0 * i as f64 / input_length as f64).sin())
        .collect();
    let x = Tensor::new([1, c, input_length], data)?;
    for _ in 0..warmup {
        model.infer(&x)?;
    }
    let mut times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let t = Instant::now();
        std::hint::black_box(model.infer(std::hint::black_box(&x))?);
        times.push(t.elapsed().as_secs_f64());
    }
    let latency = median(times);
    let memory = MemoryEstimate::new(model.config(), ensemble_size);
    Ok(BenchReport {
        parameters: model.num_parameters(),
        megabytes_per_model: memory.megabytes_per_model(),
        megabytes_ensemble: memory.megabytes_ensemble(),
        memory,
        input_length,
        warmup,
        repetitions,
        latency_seconds: latency,
        throughput_per_second: 1.0 / latency,
        hardware: hardware(),
    })
}

pub fn bench_text(r: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "parameters: {}", r.parameters);
    let _ = writeln!(out, "memory per model (32-bit): {:.2} MB", r.megabytes_per_model);
    let _ = writeln!(
        out,
        "memory for {} models (32-bit): {:.2} MB",
        r.memory.ensemble_size, r.megabytes_ensemble
    );
    let _ = writeln!(out, "input length: {}", r.input_length);
    let _ = writeln!(out, "repetitions: {} (after {} warmup)", r.repetitions, r.warmup);
    let _ = writeln!(out, "median latency per sample: {:.3} ms", r.latency_seconds * 1e3);
    let _ = writeln!(out, "throughput: {:.1} samples/s", r.throughput_per_second);
    let _ = writeln!(out, "hardware: {}", r.hardware);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
