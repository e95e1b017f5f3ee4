//! RReliefF feature importance for a continuous target.
//!
//! For each sampled instance the `k` nearest neighbors are weighted by rank
//! (`exp(-(rank/σ)²)`, normalized per instance). A feature scores high when
//! neighbors that differ in the target also differ in that feature, and low
//! when neighbors differ in the feature but not in the target.
//!
//! Attribute and target differences are range-normalized, and the neighbor
//! distance is the sum of attribute differences, so weights do not depend on
//! any positive affine rescaling of a column.

mod ranking;

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::survival::SurvivalDataset;

pub use ranking::{FeatureRanking, RankedFeature};

#[derive(Debug, Clone, PartialEq)]
pub struct ReliefConfig {
    pub k_neighbors: usize,
    /// Number of sampled instances; `None` uses every instance.
    pub m_samples: Option<usize>,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for ReliefConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 10,
            m_samples: None,
            sigma: 20.0,
            seed: 0,
        }
    }
}

impl ReliefConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::invalid("relief: k_neighbors must be at least 1"));
        }
        if self.m_samples == Some(0) {
            return Err(Error::invalid("relief: m_samples must be at least 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("relief: sigma {} must be > 0", self.sigma)));
        }
        Ok(())
    }
}

struct Contribution {
    d_target: f64,
    d_attr: Vec<f64>,
    d_both: Vec<f64>,
}

/// Importance weights of every feature column for predicting `target`.
pub fn rrelieff<T: Scalar>(
    features: ArrayView2<'_, T>,
    feature_names: &[String],
    target: &[T],
    config: &ReliefConfig,
) -> Result<FeatureRanking> {
    config.validate()?;
    let (n, d) = features.dim();
    if feature_names.len() != d || target.len() != n {
        return Err(Error::invalid(format!(
            "relief: {n}x{d} features, {} names, {} targets",
            feature_names.len(),
            target.len()
        )));
    }
    let k = config.k_neighbors;
    if n < k + 1 {
        return Err(Error::invalid(format!(
            "relief: {k} neighbors requested but only {} other instances",
            n.saturating_sub(1)
        )));
    }
    let m = config.m_samples.unwrap_or(n);
    if m > n {
        return Err(Error::invalid(format!("relief: m_samples {m} exceeds {n} instances")));
    }

    let x: Vec<f64> = features.iter().map(|v| v.as_f64()).collect();
    let y: Vec<f64> = target.iter().map(|v| v.as_f64()).collect();
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("relief input".into()));
    }
    // Reciprocal ranges; zero-range columns contribute no difference.
    let inv_range: Vec<f64> = (0..d)
        .map(|a| {
            let col = (0..n).map(|i| x[i * d + a]);
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if hi > lo {
                1.0 / (hi - lo)
            } else {
                log::warn!("relief: feature '{}' is constant; its weight is 0", feature_names[a]);
                0.0
            }
        })
        .collect();
    let (y_lo, y_hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let zero_ranking = || {
        FeatureRanking::new(
            feature_names
                .iter()
                .map(|name| RankedFeature {
                    name: name.clone(),
                    weight: 0.0,
                })
                .collect(),
        )
    };
    if y_hi <= y_lo {
        return zero_ranking();
    }
    let y_inv = 1.0 / (y_hi - y_lo);

    let rank_weights: Vec<f64> = {
        let raw: Vec<f64> = (1..=k).map(|r| (-(r as f64 / config.sigma).powi(2)).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    };

    let instances: Vec<usize> = if m == n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut chosen = sample(&mut rng, n, m).into_vec();
        chosen.sort_unstable();
        chosen
    };

    let diff = |a: usize, i: usize, j: usize| (x[i * d + a] - x[j * d + a]).abs() * inv_range[a];
    let contributions: Vec<Contribution> = instances
        .par_iter()
        .map(|&i| {
            let mut dist: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((0..d).map(|a| diff(a, i, j)).sum(), j))
                .collect();
            let by_distance = |p: &(f64, usize), q: &(f64, usize)| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1));
            if dist.len() > k {
                dist.select_nth_unstable_by(k - 1, by_distance);
                dist.truncate(k);
            }
            dist.sort_by(by_distance);
            let mut c = Contribution {
                d_target: 0.0,
                d_attr: vec![0.0; d],
                d_both: vec![0.0; d],
            };
            for (&(_, j), &w) in dist.iter().zip(&rank_weights) {
                let dy = (y[i] - y[j]).abs() * y_inv * w;
                c.d_target += dy;
                for a in 0..d {
                    let da = diff(a, i, j);
                    c.d_attr[a] += da * w;
                    c.d_both[a] += da * dy;
                }
            }
            c
        })
        .collect();

    // Sequential reduction keeps the result independent of thread count.
    let mut n_dc = 0.0;
    let mut n_da = vec![0.0; d];
    let mut n_dcda = vec![0.0; d];
    for c in &contributions {
        n_dc += c.d_target;
        for a in 0..d {
            n_da[a] += c.d_attr[a];
            n_dcda[a] += c.d_both[a];
        }
    }
    if n_dc <= 0.0 {
        return zero_ranking();
    }
    let rest = m as f64 - n_dc;
    FeatureRanking::new(
        (0..d)
            .map(|a| {
                let differ = n_dcda[a] / n_dc;
                let agree = if rest > 0.0 { (n_da[a] - n_dcda[a]) / rest } else { 0.0 };
                RankedFeature {
                    name: feature_names[a].clone(),
                    weight: differ - agree,
                }
            })
            .collect(),
    )
}

/// Ranks a dataset's features against its observed durations (censored rows
/// included at their censoring times).
pub fn rank_dataset<T: Scalar>(dataset: &SurvivalDataset<T>, config: &ReliefConfig) -> Result<FeatureRanking> {
    rrelieff(dataset.features(), dataset.feature_names(), dataset.durations(), config)
}
