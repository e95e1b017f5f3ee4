use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::SurvivalDataset;

/// Samples with an observed event at one distinct event time.
#[derive(Debug, Clone, PartialEq)]
pub struct EventGroup<T> {
    pub time: T,
    /// Indices of the samples whose event occurs at `time`, ascending.
    pub events: Vec<usize>,
    at_risk_len: usize,
}

/// Distinct event times in ascending order with their risk sets.
///
/// Risk sets are stored as prefixes of one ordering (durations descending,
/// ties by ascending index), which makes their nesting structural.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSets<T> {
    order: Vec<usize>,
    groups: Vec<EventGroup<T>>,
}

impl<T: Scalar> RiskSets<T> {
    pub fn groups(&self) -> &[EventGroup<T>] {
        &self.groups
    }

    /// Indices of the samples with duration ≥ the time of group `g`.
    pub fn at_risk(&self, g: usize) -> &[usize] {
        &self.order[..self.groups[g].at_risk_len]
    }

    /// Sample indices sorted by descending duration.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn at_risk_len(&self, g: usize) -> usize {
        self.groups[g].at_risk_len
    }
}

pub fn risk_sets<T: Scalar>(dataset: &SurvivalDataset<T>) -> Result<RiskSets<T>> {
    build(dataset.durations(), dataset.events())
}

pub(crate) fn build<T: Scalar>(durations: &[T], events: &[bool]) -> Result<RiskSets<T>> {
    let mut order: Vec<usize> = (0..durations.len()).collect();
    order.sort_by(|&a, &b| {
        durations[b]
            .partial_cmp(&durations[a])
            .expect("finite durations")
            .then(a.cmp(&b))
    });

    // Walk the descending order; each run of equal durations closes a block
    // whose at-risk prefix ends at the block's last position.
    let mut groups = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let time = durations[order[start]];
        let mut end = start;
        while end < order.len() && durations[order[end]] == time {
            end += 1;
        }
        let mut tied: Vec<usize> = order[start..end]
            .iter()
            .copied()
            .filter(|&i| events[i])
            .collect();
        if !tied.is_empty() {
            tied.sort_unstable();
            groups.push(EventGroup {
                time,
                events: tied,
                at_risk_len: end,
            });
        }
        start = end;
    }
    if groups.is_empty() {
        return Err(Error::NoEvents);
    }
    groups.reverse();
    Ok(RiskSets { order, groups })
}
