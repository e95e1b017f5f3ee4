//! Model evaluation: concordance, k-fold cross-validation and random
//! hyperparameter search over the ranking → selection → network pipeline.

mod cindex;
mod cv;
mod kfold;
mod pipeline;
mod search;
mod seed;
mod space;

pub use cindex::c_index;
pub use cv::{cross_validate, cross_validate_folds, mean, FoldResult, Pipeline};
pub use kfold::{complement, kfold_split};
pub use pipeline::{DeepModel, DeepPipeline, LinearModel, LinearPipeline, Model};
pub use search::{random_search, trial_log_csv, SearchOptions, SearchOutcome, TrialRecord, TrialStatus};
pub use seed::derive_seed;
pub use space::{Dist, SearchSpace};
