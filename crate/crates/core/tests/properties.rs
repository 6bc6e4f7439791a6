mod common;

use common::{random_tensor, rng};
use proptest::prelude::*;
use rand::Rng;
use sigcat_core::tensor::{cross_entropy, focal_loss, kernels, AdamW, Graph, LossConfig, OptimizerConfig, ParamRef, Tensor};
use sigcat_core::train::{confusion, metrics, Averaging};

#[test]
fn softmax_rows_are_distributions() {
    let mut r = rng(1);
    for _ in 0..200 {
        let cols = r.random_range(1..8);
        let mut x = random_tensor(&[3, cols], &mut r);
        x.data_mut().iter_mut().for_each(|v| *v *= 50.0);
        let p = kernels::softmax_rows(x.data(), cols);
        for row in p.chunks_exact(cols) {
            assert!(row.iter().all(|&v| v > 0.0 || cols > 1));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn inverted_dropout_preserves_expectation() {
    let n = 20_000;
    let p = 0.6;
    let mut g = Graph::new();
    let x = g.constant(Tensor::full([n], 2.0));
    let y = g.dropout(x, p, &mut rng(5)).unwrap();
    let mean = g.value(y).data().iter().sum::<f64>() / n as f64;
    // Each output is 2/(1-p) with probability 1-p: std 2·sqrt(p/(1-p)).
    let sigma = 2.0 * (p / (1.0 - p)).sqrt() / (n as f64).sqrt();
    assert!((mean - 2.0).abs() < 3.0 * sigma, "{mean}");
}

#[test]
fn adamw_without_decay_matches_plain_adam() {
    let cfg = OptimizerConfig {
        learning_rate: 0.01,
        weight_decay: 0.0,
        ..OptimizerConfig::default()
    };
    let mut r = rng(2);
    let mut p = Tensor::from_vec((0..5).map(|_| r.random_range(-1.0..1.0)).collect());
    let mut reference = p.data().to_vec();
    let (mut m, mut v) = (vec![0.0; 5], vec![0.0; 5]);
    let mut opt = AdamW::new(cfg).unwrap();
    for t in 1..=10 {
        let grad: Vec<f64> = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
        p.zero_grad();
        p.set_requires_grad(true);
        {
            let mut g = Graph::new();
            let pv = g.bind(&mut p);
            let w = g.constant(Tensor::from_vec(grad.clone()));
            let prod = g.mul(pv, w).unwrap();
            let s = g.sum(prod);
            g.backward(s).unwrap();
        }
        opt.step(&mut [ParamRef {
            name: "p".into(),
            decay: true,
            tensor: &mut p,
        }])
        .unwrap();
        for i in 0..5 {
            m[i] = 0.9 * m[i] + 0.1 * grad[i];
            v[i] = 0.999 * v[i] + 0.001 * grad[i] * grad[i];
            let mh = m[i] / (1.0 - 0.9f64.powi(t));
            let vh = v[i] / (1.0 - 0.999f64.powi(t));
            reference[i] -= 0.01 * mh / (vh.sqrt() + 1e-8);
        }
    }
    for (a, b) in p.data().iter().zip(&reference) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn focal_without_focusing_is_cross_entropy() {
    let mut r = rng(3);
    let cfg = LossConfig { gamma: 0.0, alpha: 1.0 };
    for _ in 0..1000 {
        let (b, c) = (r.random_range(1..9), r.random_range(2..6));
        let mut x = random_tensor(&[b, c], &mut r);
        x.data_mut().iter_mut().for_each(|v| *v *= 10.0);
        let t: Vec<usize> = (0..b).map(|_| r.random_range(0..c)).collect();
        let fl = focal_loss(&x, &t, &cfg).unwrap().loss;
        assert!((fl - cross_entropy(&x, &t).unwrap()).abs() < 1e-12);
    }
}

/// Metrics computed straight from the label/prediction pairs.
fn brute(labels: &[usize], preds: &[usize], c: usize, positive: usize) -> [f64; 6] {
    let count = |f: &dyn Fn(usize, usize) -> bool| labels.iter().zip(preds).filter(|(&t, &p)| f(t, p)).count() as f64;
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let n = labels.len() as f64;
    let acc = count(&|t, p| t == p) / n;
    let per = |k: usize| {
        let tp = count(&|t, p| t == k && p == k);
        let fp = count(&|t, p| t != k && p == k);
        let fn_ = count(&|t, p| t == k && p != k);
        let tn = count(&|t, p| t != k && p != k);
        let pr = div(tp, tp + fp);
        let re = div(tp, tp + fn_);
        (pr, re, div(2.0 * pr * re, pr + re), div(tp, tp + fp + fn_), tp, tn, fp, fn_)
    };
    if c == 2 {
        let (pr, re, f1, csi, tp, tn, fp, fn_) = per(positive);
        let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        return [acc, pr, re, f1, csi, div(tp * tn - fp * fn_, den)];
    }
    let rows: Vec<_> = (0..c).map(per).collect();
    let mean = |f: &dyn Fn(&(f64, f64, f64, f64, f64, f64, f64, f64)) -> f64| rows.iter().map(f).sum::<f64>() / c as f64;
    // Pearson correlation of the one-hot label and prediction matrices.
    let (mut cov_tp, mut cov_tt, mut cov_pp) = (0.0, 0.0, 0.0);
    for k in 0..c {
        let tk: Vec<f64> = labels.iter().map(|&t| (t == k) as u8 as f64).collect();
        let pk: Vec<f64> = preds.iter().map(|&p| (p == k) as u8 as f64).collect();
        let mt = tk.iter().sum::<f64>() / n;
        let mp = pk.iter().sum::<f64>() / n;
        for i in 0..labels.len() {
            cov_tp += (tk[i] - mt) * (pk[i] - mp);
            cov_tt += (tk[i] - mt) * (tk[i] - mt);
            cov_pp += (pk[i] - mp) * (pk[i] - mp);
        }
    }
    [
        acc,
        mean(&|r| r.0),
        mean(&|r| r.1),
        mean(&|r| r.2),
        mean(&|r| r.3),
        div(cov_tp, (cov_tt * cov_pp).sqrt()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn metrics_match_brute_force(
        c in prop::sample::select(vec![2usize, 3, 5]),
        pairs in prop::collection::vec((0usize..5, 0usize..5), 1..200),
        positive in 0usize..2,
    ) {
        let labels: Vec<usize> = pairs.iter().map(|p| p.0 % c).collect();
        let preds: Vec<usize> = pairs.iter().map(|p| p.1 % c).collect();
        let cm = confusion(&labels, &preds, c).unwrap();
        prop_assert_eq!(cm.total() as usize, labels.len());
        let report = metrics(&cm, (c == 2).then_some(positive)).unwrap();
        let got = report.rows().map(|(_, v)| v);
        let want = brute(&labels, &preds, c, positive);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-12, "{:?} vs {:?}", got, want);
        }
        if c == 2 {
            prop_assert_eq!(report.averaging, Averaging::Binary { positive_class: positive });
            let hm = if report.precision + report.recall == 0.0 { 0.0 } else {
                2.0 * report.precision * report.recall / (report.precision + report.recall)
            };
            prop_assert!((report.f1 - hm).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_mcc_invariant_under_class_swap(
        pairs in prop::collection::vec((0usize..2, 0usize..2), 1..200),
    ) {
        let labels: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let preds: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let swapped_l: Vec<usize> = labels.iter().map(|l| 1 - l).collect();
        let swapped_p: Vec<usize> = preds.iter().map(|p| 1 - p).collect();
        let a = metrics(&confusion(&labels, &preds, 2).unwrap(), None).unwrap().mcc;
        let b = metrics(&confusion(&swapped_l, &swapped_p, 2).unwrap(), None).unwrap().mcc;
        prop_assert!((a - b).abs() < 1e-12);
    }
}
