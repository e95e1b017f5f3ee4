use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::survival::RiskScores;

use super::config::NetworkConfig;

pub const BATCH_NORM_EPSILON: f64 = 1e-5;
/// Weight of the old value in the running-statistics update.
pub const BATCH_NORM_MOMENTUM: f64 = 0.9;

/// Fully connected layer; `weights` is `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Array1<T>,
    pub beta: Array1<T>,
    pub running_mean: Array1<T>,
    pub running_var: Array1<T>,
}

/// Linear map, optional batch normalization, then ReLU and dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer<T> {
    pub dense: Dense<T>,
    pub norm: Option<BatchNorm<T>>,
}

/// Feed-forward network ending in a single linear log-risk node.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskNetwork<T> {
    config: NetworkConfig,
    pub hidden: Vec<HiddenLayer<T>>,
    pub output: Dense<T>,
}

/// Forward-pass mode. Training draws dropout masks from the given source and
/// normalizes with batch statistics.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

pub(crate) struct NormTrace<T> {
    pub xhat: Array2<T>,
    pub inv_std: Array1<T>,
    /// Batch statistics when normalized in train mode.
    pub batch: Option<(Array1<T>, Array1<T>)>,
}

pub(crate) struct LayerTrace<T> {
    pub input: Array2<T>,
    pub pre_activation: Array2<T>,
    pub norm: Option<NormTrace<T>>,
    pub mask: Option<Array2<T>>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
pub(crate) struct ForwardTrace<T> {
    pub layers: Vec<LayerTrace<T>>,
    pub last: Array2<T>,
    pub scores: Vec<T>,
}

fn glorot<T: Scalar>(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Dense<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || {
        T::of(rng.random_range(-limit..limit))
    });
    Dense {
        weights,
        bias: Array1::zeros(fan_out),
    }
}

fn check_finite<T: Scalar>(values: &Array2<T>, layer: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("activations of {layer}")))
    }
}

impl<T: Scalar> RiskNetwork<T> {
    /// Glorot-uniform weights, zero biases, unit normalization scales.
    pub fn init(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let widths = config.layer_widths();
        let mut hidden = Vec::with_capacity(config.hidden_layers.len());
        for w in widths.windows(2).take(config.hidden_layers.len()) {
            let norm = config.batch_norm.then(|| BatchNorm {
                gamma: Array1::ones(w[1]),
                beta: Array1::zeros(w[1]),
                running_mean: Array1::zeros(w[1]),
                running_var: Array1::ones(w[1]),
            });
            hidden.push(HiddenLayer {
                dense: glorot(w[0], w[1], &mut rng),
                norm,
            });
        }
        let last = *config.hidden_layers.last().expect("validated non-empty");
        let output = glorot(last, 1, &mut rng);
        Ok(Self {
            config,
            hidden,
            output,
        })
    }

    /// Assembles a network from explicit parameters, checking every shape.
    pub fn from_parts(
        config: NetworkConfig,
        hidden: Vec<HiddenLayer<T>>,
        output: Dense<T>,
    ) -> Result<Self> {
        config.validate()?;
        let widths = config.layer_widths();
        if hidden.len() != config.hidden_layers.len() {
            return Err(Error::invalid(format!(
                "expected {} hidden layers, found {}",
                config.hidden_layers.len(),
                hidden.len()
            )));
        }
        let check = |dense: &Dense<T>, i: usize| {
            let want = (widths[i], widths[i + 1]);
            if dense.weights.dim() != want || dense.bias.len() != want.1 {
                return Err(Error::invalid(format!(
                    "layer {} has shape {:?}, expected {want:?}",
                    i + 1,
                    dense.weights.dim()
                )));
            }
            Ok(())
        };
        for (i, layer) in hidden.iter().enumerate() {
            check(&layer.dense, i)?;
            match &layer.norm {
                Some(bn) if !config.batch_norm => {
                    let _ = bn;
                    return Err(Error::invalid("normalization present but disabled in config"));
                }
                None if config.batch_norm => {
                    return Err(Error::invalid(format!("layer {} lacks normalization", i + 1)))
                }
                Some(bn) => {
                    let w = widths[i + 1];
                    if [&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var]
                        .iter()
                        .any(|v| v.len() != w)
                    {
                        return Err(Error::invalid(format!(
                            "normalization of layer {} has wrong width",
                            i + 1
                        )));
                    }
                }
                None => {}
            }
        }
        check(&output, hidden.len())?;
        let net = Self {
            config,
            hidden,
            output,
        };
        if net.parameters().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(net)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Replaces the optimizer settings while keeping the architecture.
    pub fn set_training_config(&mut self, config: NetworkConfig) -> Result<()> {
        config.validate()?;
        if config.layer_widths() != self.config.layer_widths()
            || config.batch_norm != self.config.batch_norm
        {
            return Err(Error::invalid("architecture differs from the network's"));
        }
        self.config = config;
        Ok(())
    }

    /// Trainable parameters in a fixed order: per hidden layer the weights
    /// (row-major), bias and, with normalization, scale and shift; then the
    /// output layer.
    pub fn parameters(&self) -> Vec<T> {
        let mut out = Vec::new();
        for layer in &self.hidden {
            out.extend(layer.dense.weights.iter());
            out.extend(layer.dense.bias.iter());
            if let Some(bn) = &layer.norm {
                out.extend(bn.gamma.iter());
                out.extend(bn.beta.iter());
            }
        }
        out.extend(self.output.weights.iter());
        out.extend(self.output.bias.iter());
        out
    }

    pub fn set_parameters(&mut self, values: &[T]) -> Result<()> {
        let mut slots: Vec<&mut T> = Vec::new();
        for layer in &mut self.hidden {
            slots.extend(layer.dense.weights.iter_mut());
            slots.extend(layer.dense.bias.iter_mut());
            if let Some(bn) = &mut layer.norm {
                slots.extend(bn.gamma.iter_mut());
                slots.extend(bn.beta.iter_mut());
            }
        }
        slots.extend(self.output.weights.iter_mut());
        slots.extend(self.output.bias.iter_mut());
        if slots.len() != values.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                slots.len(),
                values.len()
            )));
        }
        for (slot, &v) in slots.into_iter().zip(values) {
            *slot = v;
        }
        Ok(())
    }

    /// Number of trainable parameters, including normalization scale/shift.
    pub fn n_parameters(&self) -> usize {
        let norm: usize = self
            .hidden
            .iter()
            .filter_map(|l| l.norm.as_ref().map(|bn| 2 * bn.gamma.len()))
            .sum();
        self.config.parameter_count() + norm
    }

    /// Sum of squared weights (biases and normalization parameters excluded).
    pub fn weight_norm_squared(&self) -> T {
        self.hidden
            .iter()
            .map(|l| &l.dense.weights)
            .chain(std::iter::once(&self.output.weights))
            .map(|w| w.iter().map(|&v| v * v).sum::<T>())
            .sum()
    }

    pub fn forward(&self, features: ArrayView2<'_, T>, mode: Mode<'_>) -> Result<RiskScores<T>> {
        let trace = self.forward_trace(features, mode)?;
        RiskScores::new(trace.scores)
    }

    /// Eval-mode scores.
    pub fn predict(&self, features: ArrayView2<'_, T>) -> Result<RiskScores<T>> {
        self.forward(features, Mode::Eval)
    }

    pub(crate) fn forward_trace(
        &self,
        features: ArrayView2<'_, T>,
        mut mode: Mode<'_>,
    ) -> Result<ForwardTrace<T>> {
        if features.ncols() != self.config.n_inputs {
            return Err(Error::invalid(format!(
                "network expects {} input features, got {}",
                self.config.n_inputs,
                features.ncols()
            )));
        }
        let n = features.nrows();
        let p = self.config.dropout_rate;
        let keep_scale = T::of(1.0 / (1.0 - p));
        let eps = T::of(BATCH_NORM_EPSILON);
        let mut layers = Vec::with_capacity(self.hidden.len());
        let mut current = features.to_owned();
        for (l, layer) in self.hidden.iter().enumerate() {
            let z = current.dot(&layer.dense.weights) + &layer.dense.bias;
            let (pre, norm) = match &layer.norm {
                None => (z, None),
                Some(bn) => {
                    let (mean, var, batch) = match (&mode, n) {
                        (Mode::Train(_), n) if n > 0 => {
                            let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                            let var = z.var_axis(Axis(0), T::zero());
                            (mean.clone(), var.clone(), Some((mean, var)))
                        }
                        _ => (bn.running_mean.clone(), bn.running_var.clone(), None),
                    };
                    let inv_std = var.mapv(|v| T::one() / (v + eps).sqrt());
                    let xhat = (z - &mean) * &inv_std;
                    let y = &xhat * &bn.gamma + &bn.beta;
                    (
                        y,
                        Some(NormTrace {
                            xhat,
                            inv_std,
                            batch,
                        }),
                    )
                }
            };
            let mut activated = pre.mapv(|v| v.max(T::zero()));
            let mask = match &mut mode {
                Mode::Train(rng) if p > 0.0 => {
                    let mask = Array2::from_shape_simple_fn(activated.dim(), || {
                        if rng.random::<f64>() < p {
                            T::zero()
                        } else {
                            keep_scale
                        }
                    });
                    activated *= &mask;
                    Some(mask)
                }
                _ => None,
            };
            check_finite(&activated, &format!("hidden layer {}", l + 1))?;
            layers.push(LayerTrace {
                input: std::mem::replace(&mut current, activated),
                pre_activation: pre,
                norm,
                mask,
            });
        }
        let out = current.dot(&self.output.weights) + &self.output.bias;
        check_finite(&out, "the output layer")?;
        Ok(ForwardTrace {
            layers,
            scores: out.column(0).to_vec(),
            last: current,
        })
    }

    /// Gradient of `Σ d_scores_i · score_i + l2 · Σ‖W‖²` with respect to
    /// [`parameters`](Self::parameters), in the same order.
    pub(crate) fn backward(&self, trace: &ForwardTrace<T>, d_scores: &[T], l2: T) -> Vec<T> {
        let n = d_scores.len();
        let two_l2 = l2 + l2;
        let ds = Array2::from_shape_vec((n, 1), d_scores.to_vec()).expect("column");
        let out_w = trace.last.t().dot(&ds) + &self.output.weights * two_l2;
        let out_b = ds.sum_axis(Axis(0));
        let mut d_act = ds.dot(&self.output.weights.t());

        let mut per_layer = Vec::with_capacity(self.hidden.len());
        for (l, (layer, lt)) in self.hidden.iter().zip(&trace.layers).enumerate().rev() {
            if let Some(mask) = &lt.mask {
                d_act *= mask;
            }
            let mut d_pre = d_act;
            Zip::from(&mut d_pre)
                .and(&lt.pre_activation)
                .for_each(|d, &y| {
                    if y <= T::zero() {
                        *d = T::zero();
                    }
                });
            let (d_z, norm_grads) = match (&layer.norm, &lt.norm) {
                (Some(bn), Some(nt)) => {
                    let d_gamma = (&d_pre * &nt.xhat).sum_axis(Axis(0));
                    let d_beta = d_pre.sum_axis(Axis(0));
                    let d_xhat = &d_pre * &bn.gamma;
                    let d_z = if nt.batch.is_some() {
                        let nn = T::of_usize(n);
                        let sum = d_xhat.sum_axis(Axis(0));
                        let dot = (&d_xhat * &nt.xhat).sum_axis(Axis(0));
                        let mut d_z = d_xhat * nn - &sum - &(&nt.xhat * &dot);
                        d_z *= &(&nt.inv_std / nn);
                        d_z
                    } else {
                        d_xhat * &nt.inv_std
                    };
                    (d_z, Some((d_gamma, d_beta)))
                }
                _ => (d_pre, None),
            };
            let d_w = lt.input.t().dot(&d_z) + &layer.dense.weights * two_l2;
            let d_b = d_z.sum_axis(Axis(0));
            d_act = if l > 0 {
                d_z.dot(&layer.dense.weights.t())
            } else {
                Array2::zeros((0, 0))
            };
            per_layer.push((d_w, d_b, norm_grads));
        }
        per_layer.reverse();

        let mut flat = Vec::with_capacity(self.n_parameters());
        for (d_w, d_b, norm) in per_layer {
            flat.extend(d_w.iter());
            flat.extend(d_b.iter());
            if let Some((g, b)) = norm {
                flat.extend(g.iter());
                flat.extend(b.iter());
            }
        }
        flat.extend(out_w.iter());
        flat.extend(out_b.iter());
        flat
    }

    /// Moves running normalization statistics toward the batch statistics of
    /// a train-mode pass.
    pub(crate) fn update_running_stats(&mut self, trace: &ForwardTrace<T>) {
        let m = T::of(BATCH_NORM_MOMENTUM);
        let n = trace.last.nrows();
        // Unbiased variance for the running estimate.
        let correction = if n > 1 {
            T::of_usize(n) / T::of_usize(n - 1)
        } else {
            T::one()
        };
        for (layer, lt) in self.hidden.iter_mut().zip(&trace.layers) {
            if let (Some(bn), Some(NormTrace { batch: Some((mean, var)), .. })) =
                (&mut layer.norm, &lt.norm)
            {
                Zip::from(&mut bn.running_mean)
                    .and(mean)
                    .for_each(|r, &b| *r = m * *r + (T::one() - m) * b);
                Zip::from(&mut bn.running_var)
                    .and(var)
                    .for_each(|r, &b| *r = m * *r + (T::one() - m) * b * correction);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn config(hidden: Vec<usize>, dropout: f64) -> NetworkConfig {
        NetworkConfig {
            n_inputs: 3,
            hidden_layers: hidden,
            dropout_rate: dropout,
            seed: 7,
            ..Default::default()
        }
    }

    fn inputs() -> Array2<f64> {
        Array2::from_shape_fn((6, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin())
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = RiskNetwork::<f64>::init(config(vec![5, 4], 0.0)).unwrap();
        let b = RiskNetwork::<f64>::init(config(vec![5, 4], 0.0)).unwrap();
        assert_eq!(a, b);
        let c = RiskNetwork::<f64>::init(NetworkConfig { seed: 8, ..config(vec![5, 4], 0.0) }).unwrap();
        assert_ne!(a, c);
        let limit = (6.0f64 / 8.0).sqrt();
        assert!(a.hidden[0].dense.weights.iter().all(|w| w.abs() <= limit));
        assert!(a.hidden.iter().all(|l| l.dense.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(a.parameters().len(), a.n_parameters());
        assert_eq!(a.n_parameters(), 3 * 5 + 5 + 5 * 4 + 4 + 4 + 1);
    }

    #[test]
    fn rejects_empty_hidden_stack() {
        assert!(RiskNetwork::<f64>::init(config(vec![], 0.0)).is_err());
    }

    #[test]
    fn zero_weights_output_bias_everywhere() {
        let mut net = RiskNetwork::<f64>::init(config(vec![4], 0.0)).unwrap();
        net.hidden[0].dense.weights.fill(0.0);
        net.output.weights.fill(0.0);
        net.output.bias[0] = 0.75;
        let scores = net.predict(inputs().view()).unwrap();
        assert!(scores.iter().all(|&s| s == 0.75));
    }

    #[test]
    fn zero_dropout_train_equals_eval() {
        let net = RiskNetwork::<f64>::init(config(vec![6, 5], 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let train = net.forward(inputs().view(), Mode::Train(&mut rng)).unwrap();
        let eval = net.predict(inputs().view()).unwrap();
        assert_eq!(train.as_slice(), eval.as_slice());
        assert_eq!(eval.as_slice(), net.predict(inputs().view()).unwrap().as_slice());
    }

    #[test]
    fn dropout_changes_train_output_only() {
        let net = RiskNetwork::<f64>::init(config(vec![16], 0.5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let train = net.forward(inputs().view(), Mode::Train(&mut rng)).unwrap();
        let eval = net.predict(inputs().view()).unwrap();
        assert_ne!(train.as_slice(), eval.as_slice());
    }

    #[test]
    fn inverted_dropout_is_unbiased() {
        let net = RiskNetwork::<f64>::init(NetworkConfig {
            n_inputs: 3,
            hidden_layers: vec![32],
            dropout_rate: 0.3,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let x = array![[0.9, -0.4, 1.3]];
        let eval = net.predict(x.view()).unwrap()[0];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let mean = (0..draws)
            .map(|_| net.forward(x.view(), Mode::Train(&mut rng)).unwrap()[0])
            .sum::<f64>()
            / draws as f64;
        // Relative to the output scale excluding the (zero) bias.
        assert!(
            ((mean - eval) / eval).abs() < 0.02,
            "mean {mean} eval {eval}"
        );
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let net = RiskNetwork::<f64>::init(config(vec![4], 0.0)).unwrap();
        let x = Array2::<f64>::zeros((2, 4));
        assert!(net.predict(x.view()).is_err());
    }

    #[test]
    fn non_finite_activation_names_layer() {
        let mut net = RiskNetwork::<f64>::init(config(vec![4, 4], 0.0)).unwrap();
        net.hidden[1].dense.bias.fill(f64::INFINITY);
        let err = net.predict(inputs().view()).unwrap_err().to_string();
        assert!(err.contains("hidden layer 2"), "{err}");
    }

    #[test]
    fn parameter_vector_round_trips() {
        let mut net = RiskNetwork::<f64>::init(NetworkConfig {
            batch_norm: true,
            ..config(vec![4, 3], 0.0)
        })
        .unwrap();
        let params: Vec<f64> = (0..net.n_parameters()).map(|i| i as f64).collect();
        net.set_parameters(&params).unwrap();
        assert_eq!(net.parameters(), params);
        assert!(net.set_parameters(&params[1..]).is_err());
    }

    #[test]
    fn batch_norm_eval_uses_running_statistics() {
        let mut net = RiskNetwork::<f64>::init(NetworkConfig {
            batch_norm: true,
            ..config(vec![4], 0.0)
        })
        .unwrap();
        let x = inputs();
        let before = net.predict(x.view()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = net.forward_trace(x.view(), Mode::Train(&mut rng)).unwrap();
        // Batch-normalized pre-activations have zero mean per unit.
        for col in trace.layers[0].norm.as_ref().unwrap().xhat.columns() {
            assert!(col.sum().abs() < 1e-10);
        }
        net.update_running_stats(&trace);
        let after = net.predict(x.view()).unwrap();
        assert_ne!(before.as_slice(), after.as_slice());
        let rm = &net.hidden[0].norm.as_ref().unwrap().running_mean;
        let (mean, _) = trace.layers[0].norm.as_ref().unwrap().batch.clone().unwrap();
        for (r, m) in rm.iter().zip(mean.iter()) {
            assert!((r - 0.1 * m).abs() < 1e-15);
        }
    }
}
