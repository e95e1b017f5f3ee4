mod describe;
mod evaluate;
mod generate;
mod linear;
mod rank;
mod search;

use std::path::{Path, PathBuf};

use coxnet::eval::Model;
use coxnet::preprocess::{encode, load_csv, EncodeOptions, EncodingSpec, Schema};
use coxnet::{Dataset, Error, Result};

use crate::args::{Command, DataArgs};

pub use describe::describe;
pub use evaluate::evaluate;
pub use generate::generate;
pub use linear::fit_linear;
pub use rank::rank;
pub use search::search;

/// What a finished command reports for its manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub timing: serde_json::Value,
}

pub fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Describe(a) => describe(a),
        Command::FitLinear(a) => fit_linear(a),
        Command::Rank(a) => rank(a),
        Command::Search(a) => search(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Replay(_) => unreachable!("replay is handled by the driver"),
    }
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

pub(crate) struct Loaded {
    pub schema: Schema,
    /// Encoded but unstandardized; pipelines standardize per split.
    pub dataset: Dataset,
    pub encoding: EncodingSpec,
}

pub(crate) fn load_data(args: &DataArgs) -> Result<Loaded> {
    let schema = Schema::read(&args.schema)?;
    let table = load_csv(&args.data, &schema)?;
    let (dataset, encoding) = encode(&table, EncodeOptions { standardize: false })?;
    Ok(Loaded {
        schema,
        dataset,
        encoding,
    })
}

/// Model files plus the schema and encoding needed to score raw CSVs.
pub(crate) fn save_bundle(dir: &Path, model: &Model<f64>, loaded: &Loaded) -> Result<()> {
    model.save(dir)?;
    write_file(dir, "schema.txt", loaded.schema.to_text())?;
    write_file(dir, "encoding.txt", loaded.encoding.to_text())
}
