//! Analytic gradients against central finite differences.

mod common;

use common::{random_tensor, rng};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sigcat_core::tensor::{Graph, LossConfig, Tensor, Var};

const H: f64 = 1e-5;
const RTOL: f64 = 1e-4;
const ATOL: f64 = 1e-7;
const INSTANCES: u64 = 100;

type Build = dyn for<'a> Fn(&mut Graph<'a>, &[Var]) -> Var;

/// Reduces an op's output to a scalar with fixed random weights so every
/// output element contributes a distinct gradient.
fn weighted_sum<'a>(g: &mut Graph<'a>, y: Var, seed: u64) -> Var {
    let shape = g.shape(y).to_vec();
    let w = g.constant(random_tensor(&shape, &mut rng(seed ^ 0xABCD)));
    let p = g.mul(y, w).unwrap();
    g.sum(p)
}

fn forward_value(inputs: &mut [Tensor], build: &Build) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter_mut().map(|t| g.bind(t)).collect();
    let loss = build(&mut g, &vars);
    g.value(loss).data()[0]
}

fn close(a: f64, n: f64) -> bool {
    (a - n).abs() <= (RTOL * a.abs().max(n.abs())).max(ATOL)
}

/// Checks every element of every input; returns the worst mismatch text.
fn check(mut inputs: Vec<Tensor>, build: &Build) -> Result<(), String> {
    for t in inputs.iter_mut() {
        t.set_requires_grad(true);
    }
    {
        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter_mut().map(|t| g.bind(t)).collect();
        let loss = build(&mut g, &vars);
        g.backward(loss).map_err(|e| e.to_string())?;
    }
    let analytic: Vec<Vec<f64>> = inputs.iter().map(|t| t.grad().unwrap().to_vec()).collect();
    for (ti, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let orig = inputs[ti].data()[j];
            inputs[ti].data_mut()[j] = orig + H;
            let up = forward_value(&mut inputs, build);
            inputs[ti].data_mut()[j] = orig - H;
            let down = forward_value(&mut inputs, build);
            inputs[ti].data_mut()[j] = orig;
            let n = (up - down) / (2.0 * H);
            if !close(a, n) {
                return Err(format!("input {ti} element {j}: analytic {a}, numeric {n}"));
            }
        }
    }
    Ok(())
}

fn run(name: &str, mut instance: impl FnMut(&mut ChaCha8Rng, u64) -> Result<(), String>) {
    for i in 0..INSTANCES {
        let mut r = rng(i.wrapping_mul(7919) ^ name.len() as u64);
        if let Err(e) = instance(&mut r, i) {
            panic!("{name}, instance {i}: {e}");
        }
    }
}

/// Values bounded away from zero so no ReLU kink lies within `H`.
fn away_from_zero(shape: &[usize], r: &mut ChaCha8Rng) -> Tensor {
    let mut t = random_tensor(shape, r);
    for v in t.data_mut() {
        if v.abs() < 1e-2 {
            *v += 0.05f64.copysign(*v);
        }
    }
    t
}

#[test]
fn conv1d() {
    run("conv1d", |r, i| {
        let (b, cin, cout) = (r.random_range(1..3), r.random_range(1..4), r.random_range(1..4));
        let k = r.random_range(1..6);
        let stride = r.random_range(1..4);
        let padding = r.random_range(0..3);
        let len = r.random_range(k.max(2)..12);
        let x = random_tensor(&[b, cin, len], r);
        let w = random_tensor(&[cout, cin, k], r);
        let bias = random_tensor(&[cout], r);
        check(vec![x, w, bias], &move |g, v| {
            let y = g.conv1d(v[0], v[1], Some(v[2]), stride, padding).unwrap();
            weighted_sum(g, y, i)
        })
    });
}

#[test]
fn batch_norm_train_mode() {
    run("batch_norm_train", |r, i| {
        let (b, c, l) = (r.random_range(1..4), r.random_range(1..4), r.random_range(2..6));
        let x = random_tensor(&[b, c, l], r);
        let gamma = random_tensor(&[c], r);
        let beta = random_tensor(&[c], r);
        check(vec![x, gamma, beta], &move |g, v| {
            let (y, _) = g.batch_norm_train(v[0], v[1], v[2], 1e-5).unwrap();
            weighted_sum(g, y, i)
        })
    });
}

#[test]
fn batch_norm_eval_mode() {
    run("batch_norm_eval", |r, i| {
        let (b, c, l) = (r.random_range(1..4), r.random_range(1..4), r.random_range(1..6));
        let x = random_tensor(&[b, c, l], r);
        let gamma = random_tensor(&[c], r);
        let beta = random_tensor(&[c], r);
        let mean: Vec<f64> = (0..c).map(|_| r.random_range(-1.0..1.0)).collect();
        let var: Vec<f64> = (0..c).map(|_| r.random_range(0.2..2.0)).collect();
        check(vec![x, gamma, beta], &move |g, v| {
            let y = g.batch_norm_fixed(v[0], v[1], v[2], &mean, &var, 1e-5).unwrap();
            weighted_sum(g, y, i)
        })
    });
}

#[test]
fn linear() {
    run("linear", |r, i| {
        let (b, fi, fo) = (r.random_range(1..4), r.random_range(1..6), r.random_range(1..6));
        let x = random_tensor(&[b, fi], r);
        let w = random_tensor(&[fo, fi], r);
        let bias = random_tensor(&[fo], r);
        check(vec![x, w, bias], &move |g, v| {
            let y = g.linear(v[0], v[1], v[2]).unwrap();
            weighted_sum(g, y, i)
        })
    });
}

#[test]
fn relu_and_sigmoid() {
    run("relu_sigmoid", |r, i| {
        let x = away_from_zero(&[r.random_range(1..4), r.random_range(1..8)], r);
        check(vec![x], &move |g, v| {
            let a = g.relu(v[0]);
            let s = g.sigmoid(v[0]);
            let y = g.add(a, s).unwrap();
            weighted_sum(g, y, i)
        })
    });
}

#[test]
fn maxpool_and_avgpool() {
    run("pools", |r, i| {
        let (b, c, l) = (r.random_range(1..3), r.random_range(1..3), r.random_range(3..16));
        let x = random_tensor(&[b, c, l], r);
        check(vec![x], &move |g, v| {
            let p = g.maxpool1d(v[0], 3, 2, 1).unwrap();
            let a = g.avgpool_to_one(v[0]).unwrap();
            let sp = weighted_sum(g, p, i);
            let sa = weighted_sum(g, a, i + 1);
            g.add(sp, sa).unwrap()
        })
    });
}

#[test]
fn dropout_with_fixed_mask() {
    run("dropout", |r, i| {
        let x = random_tensor(&[r.random_range(1..4), r.random_range(1..8)], r);
        let mask: Vec<f64> = (0..x.numel()).map(|_| if r.random::<f64>() < 0.6 { 0.0 } else { 2.5 }).collect();
        check(vec![x], &move |g, v| {
            let y = g.dropout_with_mask(v[0], mask.clone());
            weighted_sum(g, y, i)
        })
    });
}

#[test]
fn softmax_and_reshape() {
    run("softmax", |r, i| {
        let (b, c) = (r.random_range(1..4), r.random_range(2..6));
        let x = random_tensor(&[b, c, 1], r);
        check(vec![x], &move |g, v| {
            let flat = g.reshape(v[0], &[b, c]).unwrap();
            let y = g.softmax(flat).unwrap();
            weighted_sum(g, y, i)
        })
    });
}

#[test]
fn focal_loss() {
    run("focal", |r, _| {
        let (b, c) = (r.random_range(1..6), r.random_range(2..6));
        let mut x = random_tensor(&[b, c], r);
        x.data_mut().iter_mut().for_each(|v| *v *= 3.0);
        let targets: Vec<usize> = (0..b).map(|_| r.random_range(0..c)).collect();
        let cfg = LossConfig {
            gamma: [0.0, 0.5, 1.0, 2.0, 3.5][r.random_range(0..5)],
            alpha: r.random_range(0.25..2.0),
        };
        check(vec![x], &move |g, v| g.focal_loss(v[0], &targets, &cfg).unwrap())
    });
}

#[test]
fn attention_gate_composite() {
    run("attention", |r, i| {
        let (b, w) = (r.random_range(1..3), 4);
        let z = away_from_zero(&[b, w], r);
        let w1 = random_tensor(&[2, w], r);
        let b1 = random_tensor(&[2], r);
        let w2 = random_tensor(&[w, 2], r);
        let b2 = random_tensor(&[w], r);
        check(vec![z, w1, b1, w2, b2], &move |g, v| {
            let h = g.linear(v[0], v[1], v[2]).unwrap();
            let h = g.relu(h);
            let a = g.linear(h, v[3], v[4]).unwrap();
            let a = g.sigmoid(a);
            let y = g.mul(v[0], a).unwrap();
            weighted_sum(g, y, i)
        })
    });
}
