use crate::error::Result;
use crate::scalar::Scalar;

use super::{CoxLoss, RiskScores, SurvivalDataset};

/// Breslow estimate of the cumulative baseline hazard, a step function that
/// jumps at each distinct event time.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineHazard<T> {
    pub event_times: Vec<T>,
    pub cumulative_hazard: Vec<T>,
}

impl<T: Scalar> BaselineHazard<T> {
    /// Cumulative hazard at `t` (zero before the first event time).
    pub fn at(&self, t: T) -> T {
        match self.event_times.iter().rposition(|&e| e <= t) {
            Some(i) => self.cumulative_hazard[i],
            None => T::zero(),
        }
    }

    /// Survival probability `exp(-H0(t) * exp(h))` for a sample with log-risk `h`.
    pub fn survival(&self, t: T, log_risk: T) -> T {
        (-self.at(t) * log_risk.exp()).exp()
    }
}

pub fn breslow_baseline<T: Scalar>(
    dataset: &SurvivalDataset<T>,
    scores: &RiskScores<T>,
) -> Result<BaselineHazard<T>> {
    let loss = CoxLoss::new(dataset)?;
    let log_den = loss.log_denominators(scores)?;
    let groups = loss.risk_sets().groups();
    let mut cumulative = T::zero();
    let mut cumulative_hazard = Vec::with_capacity(groups.len());
    for (group, &lse) in groups.iter().zip(&log_den) {
        cumulative += (T::of_usize(group.events.len()).ln() - lse).exp();
        cumulative_hazard.push(cumulative);
    }
    Ok(BaselineHazard {
        event_times: groups.iter().map(|g| g.time).collect(),
        cumulative_hazard,
    })
}
