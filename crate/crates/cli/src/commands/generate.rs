use coxnet::kv::KvFile;
use coxnet::preprocess::{dataset_to_csv, generate_synthetic, SyntheticSpec};
use coxnet::Result;

use super::{write_file, Outcome};
use crate::args::GenerateArgs;

pub fn generate(args: &GenerateArgs) -> Result<Outcome> {
    let mut spec = SyntheticSpec::from_kv(&KvFile::read(&args.spec)?)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let (dataset, truth) = generate_synthetic(&spec)?;
    let out = &args.common.out_dir;
    write_file(out, "data.csv", dataset_to_csv(&dataset))?;
    write_file(out, "schema.txt", spec.schema().to_text())?;
    write_file(out, "spec.txt", spec.to_text())?;
    write_file(out, "truth.csv", truth.to_csv())?;
    write_file(out, "truth.txt", truth.to_text())?;
    let censored = dataset.n_samples() - dataset.n_events();
    println!(
        "{} samples, {} features, {} events, {:.1}% censored",
        dataset.n_samples(),
        dataset.n_features(),
        dataset.n_events(),
        100.0 * censored as f64 / dataset.n_samples() as f64
    );
    Ok(Outcome {
        inputs: vec![args.spec.clone()],
        seed: Some(spec.seed),
        ..Default::default()
    })
}
