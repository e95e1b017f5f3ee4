//! Feed-forward network log-risk model.
//!
//! Hidden layers are `linear → [batch norm] → ReLU → dropout`; the output is
//! a single linear node. Training is full-batch gradient descent with
//! momentum on the negative log partial likelihood plus an L2 weight
//! penalty, because the partial likelihood couples all samples through their
//! risk sets.

mod config;
mod io;
mod network;
mod train;

pub use config::NetworkConfig;
pub use network::{
    BatchNorm, Dense, HiddenLayer, Mode, RiskNetwork, BATCH_NORM_EPSILON, BATCH_NORM_MOMENTUM,
};
pub use train::{objective, train, Objective, TrainingReport};
