use crate::error::{Error, Result};
use crate::scalar::{LogSumExp, Scalar};

use super::risk::{build, RiskSets};
use super::{RiskScores, SurvivalDataset};

/// Negative log partial likelihood with its risk-set structure precomputed.
///
/// Build once per dataset and evaluate against many score vectors, as the
/// network trainer does every epoch.
#[derive(Debug, Clone)]
pub struct CoxLoss<T> {
    risk: RiskSets<T>,
    durations: Vec<T>,
    events: Vec<bool>,
}

impl<T: Scalar> CoxLoss<T> {
    pub fn new(dataset: &SurvivalDataset<T>) -> Result<Self> {
        Self::from_outcomes(dataset.durations(), dataset.events())
    }

    pub fn from_outcomes(durations: &[T], events: &[bool]) -> Result<Self> {
        Ok(Self {
            risk: build(durations, events)?,
            durations: durations.to_vec(),
            events: events.to_vec(),
        })
    }

    pub fn risk_sets(&self) -> &RiskSets<T> {
        &self.risk
    }

    pub fn n_samples(&self) -> usize {
        self.durations.len()
    }

    fn check(&self, scores: &[T]) -> Result<()> {
        if scores.len() != self.durations.len() {
            return Err(Error::invalid(format!(
                "{} risk scores for {} samples",
                scores.len(),
                self.durations.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("risk score of sample {i}")));
        }
        Ok(())
    }

    /// `ln Σ_{j ∈ R(t_g)} exp(h_j)` for every event group, ascending time.
    fn group_log_denominators(&self, scores: &[T]) -> Vec<T> {
        let groups = self.risk.groups();
        let order = self.risk.order();
        let mut out = vec![T::zero(); groups.len()];
        let mut acc = LogSumExp::default();
        let mut filled = 0;
        for g in (0..groups.len()).rev() {
            let end = self.risk.at_risk_len(g);
            for &j in &order[filled..end] {
                acc.push(scores[j]);
            }
            filled = end;
            out[g] = acc.value();
        }
        out
    }

    pub fn loss(&self, scores: &[T]) -> Result<T> {
        self.check(scores)?;
        Ok(self.loss_unchecked(scores, &self.group_log_denominators(scores)))
    }

    fn loss_unchecked(&self, scores: &[T], log_den: &[T]) -> T {
        let mut total = T::zero();
        for (group, &lse) in self.risk.groups().iter().zip(log_den) {
            for &i in &group.events {
                // lse ≥ h_i exactly, so each term is non-negative.
                total += lse - scores[i];
            }
        }
        total
    }

    pub fn gradient(&self, scores: &[T]) -> Result<Vec<T>> {
        Ok(self.loss_and_gradient(scores)?.1)
    }

    /// Loss and `∂loss/∂h_k` for every sample.
    pub fn loss_and_gradient(&self, scores: &[T]) -> Result<(T, Vec<T>)> {
        self.check(scores)?;
        let log_den = self.group_log_denominators(scores);
        let loss = self.loss_unchecked(scores, &log_den);

        // Sample k collects exp(h_k) * Σ_{g: t_g ≤ t_k} d_g / denom_g. The
        // inner sum is accumulated in log space across ascending times.
        let groups = self.risk.groups();
        let order = self.risk.order();
        let mut grad = vec![T::zero(); scores.len()];
        let mut acc = LogSumExp::default();
        let mut next_group = 0;
        for &k in order.iter().rev() {
            while next_group < groups.len() && groups[next_group].time <= self.durations[k] {
                let d = T::of_usize(groups[next_group].events.len());
                acc.push(d.ln() - log_den[next_group]);
                next_group += 1;
            }
            let log_weight = acc.value();
            let share = if log_weight == T::neg_infinity() {
                T::zero()
            } else {
                (scores[k] + log_weight).exp()
            };
            grad[k] = if self.events[k] { share - T::one() } else { share };
        }
        Ok((loss, grad))
    }

    /// `ln Σ_{R(t_g)} exp(h)` per event group; used by the Breslow estimator.
    pub(crate) fn log_denominators(&self, scores: &[T]) -> Result<Vec<T>> {
        self.check(scores)?;
        Ok(self.group_log_denominators(scores))
    }
}

pub fn neg_log_partial_likelihood<T: Scalar>(
    dataset: &SurvivalDataset<T>,
    scores: &RiskScores<T>,
) -> Result<T> {
    CoxLoss::new(dataset)?.loss(scores)
}

pub fn nll_gradient<T: Scalar>(
    dataset: &SurvivalDataset<T>,
    scores: &RiskScores<T>,
) -> Result<Vec<T>> {
    CoxLoss::new(dataset)?.gradient(scores)
}
