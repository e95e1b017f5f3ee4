//! Cox proportional hazards modeling of waiting times.
//!
//! The crate provides the survival data model and partial likelihood
//! ([`survival`]), data preparation ([`preprocess`]), the linear Cox model
//! ([`linear`]), a feed-forward network log-risk model ([`deep`]), RReliefF
//! feature ranking ([`relieff`]) and model evaluation with cross-validation
//! and random hyperparameter search ([`eval`]).
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`, which is what file-based
//! workflows use.

pub mod deep;
pub mod error;
pub mod eval;
pub mod kv;
pub mod linalg;
pub mod linear;
pub mod preprocess;
pub mod relieff;
pub mod scalar;
pub mod survival;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

pub type Dataset = survival::SurvivalDataset<f64>;
pub type Scores = survival::RiskScores<f64>;
pub type Baseline = survival::BaselineHazard<f64>;
pub type Network = deep::RiskNetwork<f64>;
pub type CphFit = linear::LinearCphFit<f64>;
pub type FittedModel = eval::Model<f64>;
