use coxnet::eval::{random_search, DeepPipeline, Model, Pipeline, SearchOptions, SearchSpace, TrialStatus};
use coxnet::kv::{KvFile, KvWriter};
use coxnet::Result;
use serde_json::json;

use super::{load_data, save_bundle, write_file, Outcome};
use crate::args::SearchArgs;

pub const TRIAL_LOG: &str = "trials.csv";

pub fn search(args: &SearchArgs) -> Result<Outcome> {
    let loaded = load_data(&args.data)?;
    let ds = &loaded.dataset;
    let mut space = SearchSpace::from_kv(&KvFile::read(&args.space)?)?;
    if let Some(seed) = args.seed {
        space.seed = seed;
    }
    if let Some(budget) = args.budget {
        space.budget = budget;
    }
    space.validate()?;
    let out = &args.common.out_dir;
    std::fs::create_dir_all(out).map_err(|e| coxnet::Error::io(out, e))?;
    write_file(out, "space.txt", space.to_text())?;

    let options = SearchOptions {
        folds: args.folds,
        log: Some(out.join(TRIAL_LOG)),
        parallel_trials: args.common.jobs,
    };
    let outcome = random_search(&space, ds, &options)?;
    if outcome.resumed > 0 {
        println!("resumed {} trials from {}", outcome.resumed, TRIAL_LOG);
    }
    let best = outcome.best();
    let failed = outcome
        .trials
        .iter()
        .filter(|t| matches!(t.status, TrialStatus::Failed(_)))
        .count();

    // Refit the winning configuration on all rows.
    let pipeline = DeepPipeline {
        network: best.config.clone(),
        relief: space.relief.clone(),
        early_stopping_fraction: space.early_stopping_fraction,
    };
    let mut model = Pipeline::<f64>::fit(&pipeline, ds, best.seed)?;
    model.report = None;
    let model = Model::Deep(model);
    save_bundle(&out.join("model"), &model, &loaded)?;

    let mut w = KvWriter::new();
    w.put("trial", best.trial)
        .put("seed", best.seed)
        .put("mean_c_index", best.mean_c_index.expect("best trial succeeded"))
        .put_list("fold_c_indices", &best.fold_c_indices)
        .put_list("selected_features", &model.used_features()?)
        .put("n_inputs", best.config.n_inputs)
        .put_list("hidden_layers", &best.config.hidden_layers)
        .put("dropout_rate", best.config.dropout_rate)
        .put("batch_norm", best.config.batch_norm)
        .put("learning_rate", best.config.learning_rate)
        .put("l2_coefficient", best.config.l2_coefficient)
        .put("lr_decay", best.config.lr_decay)
        .put("momentum", best.config.momentum)
        .put("epochs", best.config.epochs);
    write_file(out, "best.txt", w.finish())?;

    println!(
        "{} trials ({} failed); best trial {}: mean C-index ({}-fold) {:.4}",
        outcome.trials.len(),
        failed,
        best.trial,
        args.folds,
        best.mean_c_index.unwrap_or(f64::NAN)
    );
    println!(
        "  n = {}, hidden layers {:?}, dropout {}, batch norm {}, lr {:.3e}, l2 {:.3e}",
        best.config.n_inputs,
        best.config.hidden_layers,
        best.config.dropout_rate,
        if best.config.batch_norm { "on" } else { "off" },
        best.config.learning_rate,
        best.config.l2_coefficient
    );
    let timing: Vec<_> = outcome
        .trials
        .iter()
        .filter_map(|t| t.wall_time.map(|d| json!({"trial": t.trial, "seconds": d.as_secs_f64()})))
        .collect();
    Ok(Outcome {
        inputs: vec![args.data.data.clone(), args.data.schema.clone(), args.space.clone()],
        seed: Some(space.seed),
        timing: json!({ "trials": timing }),
    })
}
