use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::deep::NetworkConfig;
use crate::error::{Error, Result};
use crate::survival::SurvivalDataset;

use super::cv::{cross_validate_folds, mean};
use super::kfold::kfold_split;
use super::pipeline::DeepPipeline;
use super::space::SearchSpace;

#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub config: NetworkConfig,
    pub fold_c_indices: Vec<f64>,
    pub mean_c_index: Option<f64>,
    pub status: TrialStatus,
    /// `None` for trials restored from a log.
    pub wall_time: Option<Duration>,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub folds: usize,
    /// Trial log; existing rows are reused, new rows appended as trials end.
    pub log: Option<PathBuf>,
    /// Trials evaluated concurrently.
    pub parallel_trials: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            log: None,
            parallel_trials: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub trials: Vec<TrialRecord>,
    /// Index into `trials` of the highest mean C-index (earliest on ties).
    pub best: usize,
    pub resumed: usize,
}

impl SearchOutcome {
    pub fn best(&self) -> &TrialRecord {
        &self.trials[self.best]
    }
}

fn header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "trial",
        "seed",
        "n_inputs",
        "hidden_layers",
        "dropout_rate",
        "batch_norm",
        "learning_rate",
        "l2_coefficient",
        "lr_decay",
        "momentum",
        "epochs",
        "status",
        "mean_c_index",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=k).map(|f| format!("fold_{f}")));
    h.push("message".into());
    h
}

fn config_fields(trial: usize, seed: u64, c: &NetworkConfig) -> Vec<String> {
    let layers: Vec<String> = c.hidden_layers.iter().map(|w| w.to_string()).collect();
    vec![
        trial.to_string(),
        seed.to_string(),
        c.n_inputs.to_string(),
        layers.join(";"),
        c.dropout_rate.to_string(),
        c.batch_norm.to_string(),
        c.learning_rate.to_string(),
        c.l2_coefficient.to_string(),
        c.lr_decay.to_string(),
        c.momentum.to_string(),
        c.epochs.to_string(),
    ]
}

fn record_fields(r: &TrialRecord, k: usize) -> Vec<String> {
    let mut f = config_fields(r.trial, r.seed, &r.config);
    match &r.status {
        TrialStatus::Ok => {
            f.push("ok".into());
            f.push(r.mean_c_index.map(|m| m.to_string()).unwrap_or_default());
            f.extend(r.fold_c_indices.iter().map(|c| c.to_string()));
            f.push(String::new());
        }
        TrialStatus::Failed(msg) => {
            f.push("failed".into());
            f.extend(std::iter::repeat_n(String::new(), k + 1));
            f.push(msg.clone());
        }
    }
    f
}

fn csv_line(fields: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields)?;
    w.into_inner().map_err(|e| Error::invalid(e.to_string()))
}

/// The trial log as CSV text: header plus one row per trial.
pub fn trial_log_csv(trials: &[TrialRecord], k: usize) -> Result<String> {
    let mut out = csv_line(&header(k))?;
    for r in trials {
        out.extend(csv_line(&record_fields(r, k))?);
    }
    String::from_utf8(out).map_err(|e| Error::invalid(e.to_string()))
}

fn read_log(path: &Path, space: &SearchSpace, k: usize) -> Result<Vec<TrialRecord>> {
    let bad = |m: String| Error::invalid(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path)?;
    let got: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if got != header(k) {
        return Err(bad(format!("trial log header does not match a {k}-fold search")));
    }
    let mut trials = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let fields: Vec<&str> = record.iter().collect();
        let trial = row;
        let seed = space.trial_seed(trial);
        let config = space.sample(trial);
        if trial >= space.budget || fields[..11] != config_fields(trial, seed, &config)[..] {
            return Err(bad(format!(
                "row {} was written for a different search space or seed",
                row + 1
            )));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("row {}: bad number '{s}'", row + 1)));
        let (status, mean_c_index, folds) = match fields[11] {
            "ok" => {
                let folds = fields[13..13 + k].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                (TrialStatus::Ok, Some(num(fields[12])?), folds)
            }
            "failed" => (TrialStatus::Failed(fields[13 + k].to_string()), None, vec![]),
            other => return Err(bad(format!("row {}: unknown status '{other}'", row + 1))),
        };
        trials.push(TrialRecord {
            trial,
            seed,
            config,
            fold_c_indices: folds,
            mean_c_index,
            status,
            wall_time: None,
        });
    }
    Ok(trials)
}

fn run_trial(
    space: &SearchSpace,
    dataset: &SurvivalDataset<f64>,
    folds: &[Vec<usize>],
    trial: usize,
) -> TrialRecord {
    let start = Instant::now();
    let config = space.sample(trial);
    let seed = space.trial_seed(trial);
    let pipeline = DeepPipeline {
        network: config.clone(),
        relief: space.relief.clone(),
        early_stopping_fraction: space.early_stopping_fraction,
    };
    let (status, fold_c_indices, mean_c_index) = match cross_validate_folds(&pipeline, dataset, folds, seed) {
        Ok(results) => {
            let c: Vec<f64> = results.iter().map(|r| r.c_index).collect();
            let m = mean(&c);
            (TrialStatus::Ok, c, Some(m))
        }
        Err(e) => {
            log::warn!("trial {trial} failed: {e}");
            (TrialStatus::Failed(e.to_string()), vec![], None)
        }
    };
    TrialRecord {
        trial,
        seed,
        config,
        fold_c_indices,
        mean_c_index,
        status,
        wall_time: Some(start.elapsed()),
    }
}

/// Cross-validates `space.budget` sampled networks on one shared fold split
/// (seeded by `space.seed`) and returns every trial with the best one marked.
pub fn random_search(
    space: &SearchSpace,
    dataset: &SurvivalDataset<f64>,
    options: &SearchOptions,
) -> Result<SearchOutcome> {
    space.validate()?;
    let (_, max_inputs) = space.n_inputs.support();
    if max_inputs as usize > dataset.n_features() {
        return Err(Error::invalid(format!(
            "search space allows {max_inputs} inputs but the data has {} features",
            dataset.n_features()
        )));
    }
    let k = options.folds;
    let folds = kfold_split(dataset.events(), k, space.seed)?;

    let mut trials = match &options.log {
        Some(path) if path.exists() => read_log(path, space, k)?,
        _ => Vec::new(),
    };
    let resumed = trials.len();
    let mut log = match &options.log {
        Some(path) => {
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            if resumed == 0 {
                file.set_len(0).map_err(|e| Error::io(path, e))?;
                file.write_all(&csv_line(&header(k))?).map_err(|e| Error::io(path, e))?;
            }
            Some((path.clone(), file))
        }
        None => None,
    };

    let chunk = options.parallel_trials.max(1);
    let mut next = resumed;
    while next < space.budget {
        let end = (next + chunk).min(space.budget);
        let batch: Vec<TrialRecord> = (next..end)
            .into_par_iter()
            .map(|t| run_trial(space, dataset, &folds, t))
            .collect();
        for r in batch {
            if let Some((path, file)) = &mut log {
                file.write_all(&csv_line(&record_fields(&r, k))?)
                    .and_then(|_| file.flush())
                    .map_err(|e| Error::io(path.as_path(), e))?;
            }
            log::info!(
                "trial {} {}",
                r.trial,
                r.mean_c_index.map_or_else(|| "failed".to_string(), |m| format!("mean C-index {m:.4}"))
            );
            trials.push(r);
        }
        next = end;
    }

    let best = trials
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.mean_c_index.map(|m| (i, m)))
        .fold(None, |best: Option<(usize, f64)>, (i, m)| match best {
            Some((_, b)) if b >= m => best,
            _ => Some((i, m)),
        })
        .map(|(i, _)| i)
        .ok_or(Error::AllTrialsFailed(space.budget))?;
    Ok(SearchOutcome { trials, best, resumed })
}
