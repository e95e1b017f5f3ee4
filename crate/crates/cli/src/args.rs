use std::path::PathBuf;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use coxnet::kv::KvFile;
use coxnet::{Error, Result};

/// Survival modeling of waiting times: linear and network Cox models,
/// feature ranking, cross-validated hyperparameter search.
#[derive(Debug, Parser)]
#[command(name = "coxnet", version)]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write a synthetic dataset with known ground truth.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Mean waiting time per categorical level and a duration histogram.
    #[command(args_override_self = true)]
    Describe(DescribeArgs),
    /// VIF screening, linear Cox fit, backward elimination, k-fold C-index.
    #[command(args_override_self = true)]
    FitLinear(FitLinearArgs),
    /// RReliefF importance ranking of the encoded covariates.
    #[command(args_override_self = true)]
    Rank(RankArgs),
    /// Random hyperparameter search over the rank → select → network pipeline.
    #[command(args_override_self = true)]
    Search(SearchArgs),
    /// Score data with saved models and compare their C-indices.
    #[command(args_override_self = true)]
    Evaluate(EvaluateArgs),
    /// Re-run a command from its run manifest and verify identical outputs.
    #[command(args_override_self = true)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Describe(_) => "describe",
            Command::FitLinear(_) => "fit-linear",
            Command::Rank(_) => "rank",
            Command::Search(_) => "search",
            Command::Evaluate(_) => "evaluate",
            Command::Replay(_) => "replay",
        }
    }
}

/// Flags shared by every analysis command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Directory receiving every output file and the run manifest.
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// `key = value` file of flag defaults (keys are long flag names);
    /// explicit flags win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,

    /// Column declarations for the CSV.
    #[arg(long)]
    pub schema: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    /// Synthetic-data specification.
    #[arg(long)]
    pub spec: PathBuf,

    /// Overrides the seed in the data spec file.
    #[arg(long)]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Histogram bin width in duration units.
    #[arg(long, default_value_t = 1.0)]
    pub bin_width: f64,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitLinearArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Cross-validation folds.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    /// Remove covariates while the largest VIF exceeds this.
    #[arg(long, default_value_t = coxnet::preprocess::DEFAULT_VIF_THRESHOLD)]
    pub vif_threshold: f64,

    #[arg(long)]
    pub no_vif: bool,

    /// Significance level of backward elimination.
    #[arg(long, default_value_t = coxnet::linear::DEFAULT_ALPHA)]
    pub alpha: f64,

    #[arg(long)]
    pub no_elimination: bool,

    /// Newton convergence tolerance on the coefficient update.
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,

    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,

    /// Ridge penalty for singular designs.
    #[arg(long)]
    pub ridge: Option<f64>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Folds whose training-split rankings are averaged.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    /// Rank once on all rows instead of averaging over folds.
    #[arg(long)]
    pub full_data: bool,

    /// Nearest neighbors per instance.
    #[arg(long, default_value_t = 10)]
    pub neighbors: usize,

    /// Rank-influence width.
    #[arg(long, default_value_t = 20.0)]
    pub sigma: f64,

    /// Sampled instances (default: all).
    #[arg(long)]
    pub samples: Option<usize>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Search-space file.
    #[arg(long)]
    pub space: PathBuf,

    /// Overrides the space's seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Overrides the space's trial budget.
    #[arg(long)]
    pub budget: Option<usize>,

    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// CSV to score; each model reads it with its own stored schema.
    #[arg(long)]
    pub data: PathBuf,

    /// Model directory written by fit-linear or search (repeatable).
    #[arg(long = "model", required = true, action = ArgAction::Append)]
    pub models: Vec<PathBuf>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Where to write the re-run outputs (default: the recorded directory).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Expands `--config FILE` into flags placed before the explicit ones, so
/// explicit flags override file values, which override defaults. Returns
/// the expanded argument list (without the program name and without
/// `--config`) and the config path.
pub fn expand_config(args: &[String]) -> Result<(Vec<String>, Option<PathBuf>)> {
    let Some(sub_pos) = args.iter().position(|a| !a.starts_with('-')) else {
        return Ok((args.to_vec(), None));
    };
    let mut rest = Vec::new();
    let mut config = None;
    let mut i = sub_pos + 1;
    while i < args.len() {
        let a = &args[i];
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if a == "--config" {
            let v = args
                .get(i + 1)
                .ok_or_else(|| Error::invalid("--config needs a file"))?;
            config = Some(PathBuf::from(v));
            i += 1;
        } else {
            rest.push(a.clone());
        }
        i += 1;
    }
    let mut out: Vec<String> = args[..=sub_pos].to_vec();
    if let Some(path) = &config {
        let kv = KvFile::read(path)?;
        let command = Cli::command();
        let sub = command
            .find_subcommand(&args[sub_pos])
            .ok_or_else(|| Error::invalid(format!("unknown command '{}'", args[sub_pos])))?;
        for entry in kv.entries() {
            let arg = sub
                .get_arguments()
                .find(|a| a.get_long() == Some(entry.key.as_str()) && entry.key != "config")
                .ok_or_else(|| kv.error(entry, format!("not a flag of '{}'", args[sub_pos])))?;
            let flag = format!("--{}", entry.key);
            match arg.get_action() {
                ArgAction::SetTrue => match entry.value.as_str() {
                    "true" => out.push(flag),
                    "false" => {}
                    _ => return Err(kv.error(entry, "expected true or false")),
                },
                ArgAction::Append => {
                    for v in coxnet::kv::split_list(&entry.value) {
                        out.push(flag.clone());
                        out.push(v.to_string());
                    }
                }
                _ => {
                    out.push(flag);
                    out.push(entry.value.clone());
                }
            }
        }
    }
    out.extend(rest);
    Ok((out, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn flags_override_config_values() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "folds = 5\nseed = 3\nno-vif = true\nno-elimination = false\n").unwrap();
        let args = strings(&[
            "fit-linear", "--data", "d.csv", "--schema", "s.txt", "--config", cfg.to_str().unwrap(),
            "--out-dir", "o", "--seed", "9",
        ]);
        let (expanded, config) = expand_config(&args).unwrap();
        assert_eq!(config.as_deref(), Some(cfg.as_path()));
        assert!(!expanded.iter().any(|a| a == "--config"));
        let cli = Cli::try_parse_from(std::iter::once("coxnet".to_string()).chain(expanded)).unwrap();
        let Command::FitLinear(a) = cli.command else { panic!() };
        assert_eq!(a.folds, 5);
        assert_eq!(a.seed, 9);
        assert!(a.no_vif);
        assert!(!a.no_elimination);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "bogus = 1\n").unwrap();
        let args = strings(&["rank", "--config", cfg.to_str().unwrap()]);
        assert!(expand_config(&args).is_err());
    }
}
