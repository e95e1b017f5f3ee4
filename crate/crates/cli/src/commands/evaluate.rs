use std::fmt::Write as _;

use coxnet::eval::{c_index, Model};
use coxnet::kv::KvFile;
use coxnet::preprocess::{load_csv, EncodingSpec, Schema};
use coxnet::{Error, Result};

use super::{write_file, Outcome};
use crate::args::EvaluateArgs;

pub fn evaluate(args: &EvaluateArgs) -> Result<Outcome> {
    let out = &args.common.out_dir;
    let mut rows = Vec::new();
    let mut inputs = vec![args.data.clone()];
    for (i, dir) in args.models.iter().enumerate() {
        let schema = Schema::read(&dir.join("schema.txt"))?;
        let encoding = EncodingSpec::from_kv(&KvFile::read(&dir.join("encoding.txt"))?)?;
        let table = load_csv(&args.data, &schema)?;
        let ds = encoding.apply(&table)?;
        let model = Model::<f64>::load(dir)?;
        let scores = model.score(&ds)?;
        let c = c_index(ds.durations(), ds.events(), &scores)?;

        let mut csv = String::from("row,duration,event,score\n");
        for (r, s) in scores.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{},{s}", r + 1, ds.durations()[r], u8::from(ds.events()[r]));
        }
        write_file(out, &format!("scores_{}.csv", i + 1), csv)?;
        let label = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .filter(|n| n != "model")
            .or_else(|| dir.parent().and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| format!("model {}", i + 1));
        rows.push((label, model.kind(), model.used_features()?.len(), c));
        inputs.push(dir.clone());
    }
    if rows.is_empty() {
        return Err(Error::invalid("evaluate needs at least one --model"));
    }

    let mut csv = String::from("model,kind,covariates,c_index\n");
    for (label, kind, n, c) in &rows {
        let _ = writeln!(csv, "{},{kind},{n},{c}", csv_field(label));
    }
    write_file(out, "comparison.csv", csv)?;

    let width = rows.iter().map(|r| r.0.len() + r.1.len() + 3).max().unwrap_or(0).max(5);
    let mut table = format!("{:<width$}  {:>20}  {:>7}\n", "Model", "Number of Covariates", "C-index");
    for (label, kind, n, c) in &rows {
        let name = format!("{label} ({kind})");
        let _ = writeln!(table, "{name:<width$}  {n:>20}  {c:>7.2}");
    }
    print!("{table}");
    Ok(Outcome {
        inputs,
        ..Default::default()
    })
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}
