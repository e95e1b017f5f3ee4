use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::c_index;
use crate::scalar::Scalar;
use crate::survival::{CoxLoss, SurvivalDataset};

use super::network::{Mode, RiskNetwork};

/// Total loss of one forward pass and its gradient over
/// [`RiskNetwork::parameters`].
#[derive(Debug, Clone)]
pub struct Objective<T> {
    /// Negative log partial likelihood plus `l2 · Σ‖W‖²`.
    pub loss: T,
    pub partial_likelihood_loss: T,
    pub gradient: Vec<T>,
}

/// Evaluates the training objective; with `Mode::Train` the same dropout
/// masks and batch statistics are used for the loss and its gradient.
pub fn objective<T: Scalar>(
    net: &RiskNetwork<T>,
    features: ArrayView2<'_, T>,
    loss: &CoxLoss<T>,
    l2: T,
    mode: Mode<'_>,
) -> Result<Objective<T>> {
    Ok(objective_with_trace(net, features, loss, l2, mode)?.0)
}

fn objective_with_trace<T: Scalar>(
    net: &RiskNetwork<T>,
    features: ArrayView2<'_, T>,
    loss: &CoxLoss<T>,
    l2: T,
    mode: Mode<'_>,
) -> Result<(Objective<T>, super::network::ForwardTrace<T>)> {
    if features.nrows() != loss.n_samples() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} outcomes",
            features.nrows(),
            loss.n_samples()
        )));
    }
    let trace = net.forward_trace(features, mode)?;
    let (nll, d_scores) = loss.loss_and_gradient(&trace.scores)?;
    let gradient = net.backward(&trace, &d_scores, l2);
    let total = nll + l2 * net.weight_norm_squared();
    Ok((
        Objective {
            loss: total,
            partial_likelihood_loss: nll,
            gradient,
        },
        trace,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport<T> {
    /// Training objective of every epoch, evaluated before that epoch's step.
    pub loss_trace: Vec<T>,
    /// Validation C-index after every epoch's step (empty without validation).
    pub validation_trace: Vec<f64>,
    /// Epoch whose parameters were returned, when chosen by validation.
    pub best_epoch: Option<usize>,
    pub best_validation_c_index: Option<f64>,
}

/// Full-batch momentum descent for `net.config().epochs` epochs.
///
/// With a validation set, the parameters after the epoch with the highest
/// validation C-index are returned (the earliest such epoch on ties);
/// otherwise the final parameters.
pub fn train<T: Scalar>(
    mut net: RiskNetwork<T>,
    dataset: &SurvivalDataset<T>,
    validation: Option<&SurvivalDataset<T>>,
) -> Result<(RiskNetwork<T>, TrainingReport<T>)> {
    let config = net.config().clone();
    config.validate()?;
    dataset.require_events()?;
    if dataset.n_features() != config.n_inputs {
        return Err(Error::invalid(format!(
            "network expects {} input features, dataset has {}",
            config.n_inputs,
            dataset.n_features()
        )));
    }
    if let Some(v) = validation {
        if v.n_features() != config.n_inputs {
            return Err(Error::invalid("validation features differ from training features"));
        }
    }
    let loss = CoxLoss::new(dataset)?;
    let l2 = T::of(config.l2_coefficient);
    let momentum = T::of(config.momentum);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut params = net.parameters();
    let mut velocity = vec![T::zero(); params.len()];
    let mut report = TrainingReport {
        loss_trace: Vec::with_capacity(config.epochs),
        validation_trace: Vec::new(),
        best_epoch: None,
        best_validation_c_index: None,
    };
    let mut best: Option<RiskNetwork<T>> = None;

    for epoch in 0..config.epochs {
        let step = objective_with_trace(
            &net,
            dataset.features(),
            &loss,
            l2,
            Mode::Train(&mut rng),
        );
        let (obj, trace) = match step {
            Ok(ok) => ok,
            Err(Error::NonFinite(_)) => return Err(Error::Diverged { epoch }),
            Err(e) => return Err(e),
        };
        if !obj.loss.is_finite() || obj.gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        report.loss_trace.push(obj.loss);

        let lr = T::of(config.learning_rate * (-config.lr_decay * epoch as f64).exp());
        for ((p, v), &g) in params.iter_mut().zip(&mut velocity).zip(&obj.gradient) {
            *v = momentum * *v - lr * g;
            *p += *v;
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        net.set_parameters(&params)?;
        net.update_running_stats(&trace);

        if let Some(v) = validation {
            let scores = match net.predict(v.features()) {
                Ok(s) => s,
                Err(Error::NonFinite(_)) => return Err(Error::Diverged { epoch }),
                Err(e) => return Err(e),
            };
            let c = c_index(v.durations(), v.events(), &scores)?;
            report.validation_trace.push(c);
            if report.best_validation_c_index.is_none_or(|b| c > b) {
                report.best_validation_c_index = Some(c);
                report.best_epoch = Some(epoch);
                best = Some(net.clone());
            }
        }
    }
    Ok((best.unwrap_or(net), report))
}
