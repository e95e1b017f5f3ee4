use std::collections::HashSet;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kv::{KvFile, KvWriter};
use crate::survival::SurvivalDataset;

use super::table::{Column, RawTable};

const FORMAT: &str = "coxnet-encoding 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    /// z-score numeric columns. When off, numeric columns pass through and
    /// the encoding records mean 0, deviation 1.
    pub standardize: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self { standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EncodedColumn {
    Numeric {
        name: String,
        mean: f64,
        std_dev: f64,
    },
    /// One indicator per non-reference level, named `"column: level"`.
    Categorical {
        name: String,
        reference: String,
        levels: Vec<String>,
    },
}

/// Everything needed to encode new rows exactly like the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingSpec {
    pub standardize: bool,
    pub columns: Vec<EncodedColumn>,
}

fn indicator_name(column: &str, level: &str) -> String {
    format!("{column}: {level}")
}

/// Mean and sample standard deviation.
fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

/// One-hot encodes categorical columns (dropping the first declared level)
/// and optionally z-scores numeric columns.
pub fn encode(table: &RawTable, options: EncodeOptions) -> Result<(SurvivalDataset<f64>, EncodingSpec)> {
    let mut columns = Vec::with_capacity(table.columns.len());
    for (name, column) in table.column_names.iter().zip(&table.columns) {
        columns.push(match column {
            Column::Numeric(values) => {
                let (mean, std_dev) = if options.standardize {
                    let (mean, sd) = moments(values);
                    if !(sd > 0.0) {
                        return Err(Error::invalid(format!(
                            "numeric column '{name}' is constant; cannot standardize"
                        )));
                    }
                    (mean, sd)
                } else {
                    (0.0, 1.0)
                };
                EncodedColumn::Numeric {
                    name: name.clone(),
                    mean,
                    std_dev,
                }
            }
            Column::Categorical { levels, .. } => EncodedColumn::Categorical {
                name: name.clone(),
                reference: levels[0].clone(),
                levels: levels[1..].to_vec(),
            },
        });
    }
    let spec = EncodingSpec {
        standardize: options.standardize,
        columns,
    };
    let dataset = spec.apply(table)?;
    Ok((dataset, spec))
}

impl EncodingSpec {
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for column in &self.columns {
            match column {
                EncodedColumn::Numeric { name, .. } => names.push(name.clone()),
                EncodedColumn::Categorical { name, levels, .. } => {
                    names.extend(levels.iter().map(|l| indicator_name(name, l)))
                }
            }
        }
        names
    }

    /// Encodes `table` with the saved statistics (never recomputed).
    pub fn apply(&self, table: &RawTable) -> Result<SurvivalDataset<f64>> {
        let names = self.feature_names();
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::invalid("encoded feature names collide"));
        }
        let n = table.n_rows();
        let mut features = Array2::zeros((n, names.len()));
        let mut out = 0;
        for spec in &self.columns {
            let (name, column) = match spec {
                EncodedColumn::Numeric { name, .. } | EncodedColumn::Categorical { name, .. } => {
                    let column = table.column(name).ok_or_else(|| {
                        Error::invalid(format!("table has no column '{name}'"))
                    })?;
                    (name, column)
                }
            };
            match (spec, column) {
                (EncodedColumn::Numeric { mean, std_dev, .. }, Column::Numeric(values)) => {
                    for (r, v) in values.iter().enumerate() {
                        features[[r, out]] = if self.standardize {
                            (v - mean) / std_dev
                        } else {
                            *v
                        };
                    }
                    out += 1;
                }
                (
                    EncodedColumn::Categorical {
                        reference, levels, ..
                    },
                    Column::Categorical {
                        levels: table_levels,
                        codes,
                    },
                ) => {
                    let mapping = table_levels
                        .iter()
                        .map(|l| {
                            if l == reference {
                                Ok(None)
                            } else {
                                levels.iter().position(|x| x == l).map(Some).ok_or_else(|| {
                                    Error::invalid(format!(
                                        "column '{name}' has level '{l}' unknown to the encoding"
                                    ))
                                })
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    for (r, &code) in codes.iter().enumerate() {
                        if let Some(k) = mapping[code] {
                            features[[r, out + k]] = 1.0;
                        }
                    }
                    out += levels.len();
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "column '{name}' type differs from the encoding"
                    )))
                }
            }
        }
        SurvivalDataset::new(features, names, table.durations.clone(), table.events.clone())
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.put("format", FORMAT).put("standardize", self.standardize);
        for column in &self.columns {
            match column {
                EncodedColumn::Numeric {
                    name,
                    mean,
                    std_dev,
                } => w.put("numeric", format!("{name} | {mean} | {std_dev}")),
                EncodedColumn::Categorical {
                    name,
                    reference,
                    levels,
                } => {
                    let mut parts = vec![name.clone(), reference.clone()];
                    parts.extend(levels.iter().cloned());
                    w.put("categorical", parts.join(" | "))
                }
            };
        }
        w.finish()
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let format = kv.require("format")?;
        if format.value != FORMAT {
            return Err(kv.error(format, "unsupported encoding format"));
        }
        let standardize = kv.parse_required("standardize")?;
        let mut columns = Vec::new();
        for entry in kv.entries() {
            let parts: Vec<&str> = entry.value.split('|').map(str::trim).collect();
            match entry.key.as_str() {
                "numeric" => {
                    if parts.len() != 3 {
                        return Err(kv.error(entry, "expected 'name | mean | std_dev'"));
                    }
                    let parse = |s: &str| {
                        s.parse::<f64>()
                            .map_err(|_| kv.error(entry, format!("bad number '{s}'")))
                    };
                    columns.push(EncodedColumn::Numeric {
                        name: parts[0].to_string(),
                        mean: parse(parts[1])?,
                        std_dev: parse(parts[2])?,
                    });
                }
                "categorical" => {
                    if parts.len() < 2 {
                        return Err(kv.error(entry, "expected 'name | reference | levels...'"));
                    }
                    columns.push(EncodedColumn::Categorical {
                        name: parts[0].to_string(),
                        reference: parts[1].to_string(),
                        levels: parts[2..].iter().map(|s| s.to_string()).collect(),
                    });
                }
                _ => {}
            }
        }
        Ok(Self {
            standardize,
            columns,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::table::read_csv;
    use super::super::table::tests::{schema, CSV};
    use super::*;

    #[test]
    fn one_hot_drops_reference_level() {
        let table = read_csv(CSV.as_bytes(), &schema()).unwrap();
        let (ds, spec) = encode(&table, EncodeOptions::default()).unwrap();
        assert_eq!(
            ds.feature_names(),
            &["speed", "gender: Female", "road: Two", "road: Median"]
        );
        assert_eq!(ds.features().column(2).to_vec(), vec![0.0, 1.0, 0.0]);
        assert_eq!(ds.features().column(3).to_vec(), vec![0.0, 0.0, 1.0]);
        assert_eq!(spec.feature_names(), ds.feature_names());
    }

    #[test]
    fn numeric_standardized_to_unit_sample_sd() {
        let table = read_csv(CSV.as_bytes(), &schema()).unwrap();
        let (ds, _) = encode(&table, EncodeOptions::default()).unwrap();
        let col = ds.features().column(0).to_vec();
        let (mean, sd) = moments(&col);
        assert!(mean.abs() < 1e-12);
        assert!((sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raw_mode_passes_numeric_through() {
        let table = read_csv(CSV.as_bytes(), &schema()).unwrap();
        let (ds, spec) = encode(&table, EncodeOptions { standardize: false }).unwrap();
        assert_eq!(ds.features().column(0).to_vec(), vec![30.0, 40.0, 50.0]);
        assert!(!spec.standardize);
    }

    #[test]
    fn saved_spec_uses_saved_statistics() {
        let table = read_csv(CSV.as_bytes(), &schema()).unwrap();
        let (_, spec) = encode(&table, EncodeOptions::default()).unwrap();
        let other = read_csv(
            "id,wait,crossed,speed,gender,road\n9,1,1,40,Male,One\n".as_bytes(),
            &schema(),
        )
        .unwrap();
        let ds = spec.apply(&other).unwrap();
        // 40 is the training mean.
        assert_eq!(ds.features()[[0, 0]], 0.0);
    }

    #[test]
    fn spec_text_round_trip_is_exact() {
        let table = read_csv(CSV.replace("40,", "41.3,").as_bytes(), &schema()).unwrap();
        let (ds, spec) = encode(&table, EncodeOptions::default()).unwrap();
        let reread = EncodingSpec::from_kv(&KvFile::parse("e", &spec.to_text()).unwrap()).unwrap();
        assert_eq!(reread, spec);
        let again = reread.apply(&table).unwrap();
        for (a, b) in again.features().iter().zip(ds.features().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn constant_numeric_column_rejected() {
        let csv = CSV.replace(",40,", ",30,").replace(",50,", ",30,");
        let table = read_csv(csv.as_bytes(), &schema()).unwrap();
        let err = encode(&table, EncodeOptions::default()).unwrap_err();
        assert!(err.to_string().contains("'speed'"));
    }
}
