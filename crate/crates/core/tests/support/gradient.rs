//! Backpropagation against central finite differences of an independent,
//! loop-based implementation of the network objective.
//!
//! The oracle freezes the ReLU on/off pattern of the unperturbed point, so
//! a perturbation never crosses a kink; inside one linear region the
//! objective is smooth and central differences are accurate to O(h²).

use coxnet::deep::{objective, Mode, NetworkConfig, RiskNetwork};
use coxnet::survival::CoxLoss;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    widths: Vec<usize>,
    batch_norm: bool,
    x: Vec<Vec<f64>>,
    t: Vec<f64>,
    e: Vec<bool>,
    l2: f64,
}

/// Objective from flat parameters; `masks[layer][sample][unit]` is recorded
/// when `None` is passed as `frozen`.
fn oracle(case: &Case, params: &[f64], frozen: Option<&Vec<Vec<Vec<bool>>>>) -> (f64, Vec<Vec<Vec<bool>>>) {
    let n = case.x.len();
    let layers = case.widths.len() - 1;
    let mut pos = 0;
    let mut take = |k: usize| {
        let s = params[pos..pos + k].to_vec();
        pos += k;
        s
    };
    let mut acts = case.x.clone();
    let mut masks = Vec::new();
    let mut weight_sq = 0.0;
    for l in 0..layers {
        let (fin, fout) = (case.widths[l], case.widths[l + 1]);
        let w = take(fin * fout);
        let b = take(fout);
        weight_sq += w.iter().map(|v| v * v).sum::<f64>();
        let mut z = vec![vec![0.0; fout]; n];
        for i in 0..n {
            for o in 0..fout {
                let mut s = b[o];
                for k in 0..fin {
                    s += acts[i][k] * w[k * fout + o];
                }
                z[i][o] = s;
            }
        }
        if l == layers - 1 {
            acts = z;
            break;
        }
        if case.batch_norm {
            let gamma = take(fout);
            let beta = take(fout);
            for o in 0..fout {
                let mean = (0..n).map(|i| z[i][o]).sum::<f64>() / n as f64;
                let var = (0..n).map(|i| (z[i][o] - mean).powi(2)).sum::<f64>() / n as f64;
                for row in z.iter_mut() {
                    row[o] = gamma[o] * (row[o] - mean) / (var + 1e-5).sqrt() + beta[o];
                }
            }
        }
        let mask: Vec<Vec<bool>> = match frozen {
            Some(m) => m[l].clone(),
            None => z.iter().map(|r| r.iter().map(|&v| v > 0.0).collect()).collect(),
        };
        for i in 0..n {
            for o in 0..fout {
                if !mask[i][o] {
                    z[i][o] = 0.0;
                }
            }
        }
        masks.push(mask);
        acts = z;
    }
    let h: Vec<f64> = acts.iter().map(|r| r[0]).collect();
    let mut nll = 0.0;
    for i in 0..n {
        if case.e[i] {
            let denom: f64 = (0..n).filter(|&j| case.t[j] >= case.t[i]).map(|j| h[j].exp()).sum();
            nll += denom.ln() - h[i];
        }
    }
    (nll + case.l2 * weight_sq, masks)
}

fn make_case(seed: u64, batch_norm: bool) -> (Case, RiskNetwork<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..=30);
    let d = rng.random_range(1..=5);
    let depth = rng.random_range(1..=2);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=8)).collect();
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    // Integer durations inject ties.
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(1..=8) as f64).collect();
    let mut e: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
    e[0] = true;
    let l2 = rng.random_range(0.01..0.5);
    let config = NetworkConfig {
        n_inputs: d,
        hidden_layers: hidden.clone(),
        dropout_rate: 0.0,
        batch_norm,
        seed,
        ..Default::default()
    };
    let mut net = RiskNetwork::init(config.clone()).unwrap();
    let params: Vec<f64> = net
        .parameters()
        .iter()
        .map(|p| p + rng.random_range(-0.3..0.3))
        .collect();
    net.set_parameters(&params).unwrap();
    let case = Case {
        widths: config.layer_widths(),
        batch_norm,
        x,
        t,
        e,
        l2,
    };
    (case, net)
}

pub fn check(seed: u64, batch_norm: bool, mode_train: bool) -> f64 {
    let (case, net) = make_case(seed, batch_norm);
    let n = case.x.len();
    let d = case.widths[0];
    let x = Array2::from_shape_fn((n, d), |(i, j)| case.x[i][j]);
    let loss = CoxLoss::from_outcomes(&case.t, &case.e).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mode = if mode_train { Mode::Train(&mut rng) } else { Mode::Eval };
    let analytic = objective(&net, x.view(), &loss, case.l2, mode).unwrap();

    let theta = net.parameters();
    let (value, masks) = oracle(&case, &theta, None);
    assert!(
        (value - analytic.loss).abs() <= 1e-10 * value.abs().max(1.0),
        "seed {seed}: oracle {value} vs {}",
        analytic.loss
    );
    let step = 1e-5;
    let mut max_err: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for k in 0..theta.len() {
        let mut plus = theta.clone();
        plus[k] += step;
        let mut minus = theta.clone();
        minus[k] -= step;
        let fd = (oracle(&case, &plus, Some(&masks)).0 - oracle(&case, &minus, Some(&masks)).0) / (2.0 * step);
        max_err = max_err.max((fd - analytic.gradient[k]).abs());
        scale = scale.max(analytic.gradient[k].abs());
    }
    max_err / scale
}
