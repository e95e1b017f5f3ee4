//! Linear Cox proportional hazards: `h = x·β`, fitted by Newton–Raphson on
//! the Breslow log partial likelihood, with Wald inference and backward
//! elimination of insignificant covariates.

mod eliminate;
mod fit;
mod report;

pub use eliminate::{backward_eliminate, Removal, DEFAULT_ALPHA};
pub use fit::{fit, predict_risk, FitOptions, LinearCphFit};
