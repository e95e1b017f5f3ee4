//! Survival data model and the Cox partial likelihood.
//!
//! The hazard of sample `i` is `h0(t) * exp(h_i)`. Everything here works on
//! the log-risk scores `h_i` only, so the same routines serve the linear model
//! (`h = x·β`) and the network model (`h = f(x)`).
//!
//! Tied event times use Breslow's convention: all events at one time share
//! the risk-set denominator of that time. A censored sample whose duration
//! equals an event time is still at risk for that event.

mod baseline;
mod data;
mod likelihood;
mod risk;

pub use baseline::{breslow_baseline, BaselineHazard};
pub use data::{RiskScores, SurvivalDataset};
pub use likelihood::{neg_log_partial_likelihood, nll_gradient, CoxLoss};
pub use risk::{risk_sets, EventGroup, RiskSets};
