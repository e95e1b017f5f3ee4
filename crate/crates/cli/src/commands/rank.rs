use std::fmt::Write as _;

use coxnet::eval::{complement, derive_seed, kfold_split};
use coxnet::preprocess::Standardizer;
use coxnet::relieff::{rank_dataset, FeatureRanking, ReliefConfig};
use coxnet::Result;

use super::{load_data, write_file, Outcome};
use crate::args::RankArgs;

pub fn rank(args: &RankArgs) -> Result<Outcome> {
    let loaded = load_data(&args.data)?;
    let ds = &loaded.dataset;
    let config = ReliefConfig {
        k_neighbors: args.neighbors,
        m_samples: args.samples,
        sigma: args.sigma,
        seed: args.seed,
    };
    let ranking = if args.full_data {
        let z = Standardizer::fit(ds.features()).transform_dataset(ds)?;
        rank_dataset(&z, &config)?
    } else {
        // Average of rankings fitted on each fold's training split.
        let folds = kfold_split(ds.events(), args.folds, args.seed)?;
        let per_fold = folds
            .iter()
            .enumerate()
            .map(|(f, rows)| {
                let train = ds.select_rows(&complement(ds.n_samples(), rows));
                let z = Standardizer::fit(train.features()).transform_dataset(&train)?;
                rank_dataset(
                    &z,
                    &ReliefConfig {
                        seed: derive_seed(args.seed, f as u64),
                        ..config.clone()
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureRanking::average(&per_fold)?
    };
    write_file(&args.common.out_dir, "ranking.csv", ranking.to_csv())?;

    let width = ranking.entries().iter().map(|e| e.name.len()).max().unwrap_or(0).max(7);
    let mut table = format!("{:>4}  {:<width$}  {:>8}\n", "Rank", "Feature", "Weight");
    for (i, e) in ranking.entries().iter().enumerate() {
        let _ = writeln!(table, "{:>4}  {:<width$}  {:>8.3}", i + 1, e.name, e.weight);
    }
    print!("{table}");
    Ok(Outcome {
        inputs: vec![args.data.data.clone(), args.data.schema.clone()],
        seed: Some(args.seed),
        ..Default::default()
    })
}
