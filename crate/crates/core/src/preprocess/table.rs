use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kv::{split_list, KvFile, KvWriter};
use crate::scalar::Scalar;
use crate::survival::SurvivalDataset;

use super::describe::csv_field;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnType {
    Numeric,
    /// Declared levels in order; the first one is the encoding reference.
    Categorical(Vec<String>),
}

/// Column declarations for a CSV file.
///
/// ```text
/// duration = wait_time
/// event = crossed
/// numeric = speed_limit, lane_width
/// categorical.gender = Male, Female
/// ignore = participant
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub duration: String,
    pub event: String,
    /// Covariate declarations in file order.
    pub columns: Vec<(String, ColumnType)>,
    pub ignore: Vec<String>,
}

impl Schema {
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let duration = kv.require("duration")?.value.clone();
        let event = kv.require("event")?.value.clone();
        let mut columns = Vec::new();
        let mut ignore = Vec::new();
        for entry in kv.entries() {
            match entry.key.as_str() {
                "duration" | "event" => {}
                "numeric" => columns.extend(
                    split_list(&entry.value).map(|c| (c.to_string(), ColumnType::Numeric)),
                ),
                "ignore" => ignore.extend(split_list(&entry.value).map(str::to_string)),
                key => match key.strip_prefix("categorical.") {
                    Some(name) if !name.trim().is_empty() => {
                        let levels: Vec<String> =
                            split_list(&entry.value).map(str::to_string).collect();
                        if levels.is_empty() {
                            return Err(kv.error(entry, "categorical column needs levels"));
                        }
                        let unique: HashSet<&String> = levels.iter().collect();
                        if unique.len() != levels.len() {
                            return Err(kv.error(entry, "duplicate level"));
                        }
                        columns.push((name.trim().to_string(), ColumnType::Categorical(levels)));
                    }
                    _ => return Err(kv.error(entry, "unknown schema key")),
                },
            }
        }
        let mut seen = HashSet::new();
        for name in columns
            .iter()
            .map(|(n, _)| n)
            .chain(&ignore)
            .chain([&duration, &event])
        {
            if !seen.insert(name.clone()) {
                return Err(Error::Config {
                    file: kv.name().to_string(),
                    line: 0,
                    message: format!("column '{name}' declared more than once"),
                });
            }
        }
        Ok(Self {
            duration,
            event,
            columns,
            ignore,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.put("duration", &self.duration).put("event", &self.event);
        for (name, ty) in &self.columns {
            match ty {
                ColumnType::Numeric => w.put("numeric", name),
                ColumnType::Categorical(levels) => {
                    w.put_list(&format!("categorical.{name}"), levels)
                }
            };
        }
        if !self.ignore.is_empty() {
            w.put_list("ignore", &self.ignore);
        }
        w.finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical { levels: Vec<String>, codes: Vec<usize> },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Typed covariate columns plus the designated duration and event columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub column_names: Vec<String>,
    pub columns: Vec<Column>,
    pub duration_column: String,
    pub event_column: String,
    pub durations: Vec<f64>,
    pub events: Vec<bool>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.durations.len()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
    }
}

/// `duration,event,<features>` CSV of an encoded dataset; values use the
/// shortest representation that parses back to the same number.
pub fn dataset_to_csv<T: Scalar>(dataset: &SurvivalDataset<T>) -> String {
    let mut out = String::from("duration,event");
    for name in dataset.feature_names() {
        out.push(',');
        out.push_str(&csv_field(name));
    }
    out.push('\n');
    for i in 0..dataset.n_samples() {
        let _ = write!(out, "{},{}", dataset.durations()[i], u8::from(dataset.events()[i]));
        for v in dataset.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Parses CSV text with a header row against `schema`. Row numbers in
/// errors count data rows from 1.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<RawTable> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(Error::invalid("empty file: no header row"));
    }
    let index: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    if index.len() != header.len() {
        return Err(Error::invalid("duplicate column name in header"));
    }
    let locate = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("schema column '{name}' not found in header")))
    };
    let duration_at = locate(&schema.duration)?;
    let event_at = locate(&schema.event)?;
    let covariate_at = schema
        .columns
        .iter()
        .map(|(n, _)| locate(n))
        .collect::<Result<Vec<_>>>()?;
    for ignored in &schema.ignore {
        locate(ignored)?;
    }
    let declared: HashSet<&str> = schema
        .columns
        .iter()
        .map(|(n, _)| n.as_str())
        .chain(schema.ignore.iter().map(String::as_str))
        .chain([schema.duration.as_str(), schema.event.as_str()])
        .collect();
    if let Some(unknown) = header.iter().find(|h| !declared.contains(h.as_str())) {
        return Err(Error::invalid(format!(
            "unknown column '{unknown}': declare it in the schema or list it under ignore"
        )));
    }

    let mut columns: Vec<Column> = schema
        .columns
        .iter()
        .map(|(_, ty)| match ty {
            ColumnType::Numeric => Column::Numeric(Vec::new()),
            ColumnType::Categorical(levels) => Column::Categorical {
                levels: levels.clone(),
                codes: Vec::new(),
            },
        })
        .collect();
    let mut durations = Vec::new();
    let mut events = Vec::new();
    let mut missing_outcome = Vec::new();

    for (r, record) in csv.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |at: usize| record.get(at).unwrap_or("");
        let (d, e) = (cell(duration_at), cell(event_at));
        if d.is_empty() || e.is_empty() {
            missing_outcome.push(row);
            continue;
        }
        let duration: f64 = d.parse().map_err(|_| Error::Cell {
            row,
            column: schema.duration.clone(),
            message: format!("cannot parse '{d}' as a number"),
        })?;
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Cell {
                row,
                column: schema.duration.clone(),
                message: format!("duration must be positive, found {d}"),
            });
        }
        let event = match e {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Cell {
                    row,
                    column: schema.event.clone(),
                    message: format!("event must be 0 or 1, found '{other}'"),
                })
            }
        };
        for ((column, &at), (name, _)) in columns.iter_mut().zip(&covariate_at).zip(&schema.columns) {
            let text = cell(at);
            match column {
                Column::Numeric(values) => {
                    let v: f64 = text.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                        Error::Cell {
                            row,
                            column: name.clone(),
                            message: format!("cannot parse '{text}' as a number"),
                        }
                    })?;
                    values.push(v);
                }
                Column::Categorical { levels, codes } => {
                    let code = levels.iter().position(|l| l == text).ok_or_else(|| Error::Cell {
                        row,
                        column: name.clone(),
                        message: format!(
                            "unknown level '{text}'; allowed levels: {}",
                            levels.join(", ")
                        ),
                    })?;
                    codes.push(code);
                }
            }
        }
        durations.push(duration);
        events.push(event);
    }
    if !missing_outcome.is_empty() {
        let rows: Vec<String> = missing_outcome.iter().map(|r| r.to_string()).collect();
        return Err(Error::invalid(format!(
            "missing duration or event in rows {}",
            rows.join(", ")
        )));
    }
    if durations.is_empty() {
        return Err(Error::invalid("file has a header but no data rows"));
    }
    Ok(RawTable {
        column_names: schema.columns.iter().map(|(n, _)| n.clone()).collect(),
        columns,
        duration_column: schema.duration.clone(),
        event_column: schema.event.clone(),
        durations,
        events,
    })
}
