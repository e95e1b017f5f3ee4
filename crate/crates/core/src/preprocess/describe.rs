use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::table::{Column, RawTable};

#[derive(Debug, Clone, PartialEq)]
pub struct LevelMean {
    pub variable: String,
    pub level: String,
    pub count: usize,
    /// `None` when no row has this level.
    pub mean: Option<f64>,
}

/// Counts of durations in `[k·w, (k+1)·w)` for `k = 0, 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Description {
    pub level_means: Vec<LevelMean>,
    pub histogram: Histogram,
}

/// Mean duration per categorical level and a duration histogram.
pub fn describe(table: &RawTable, bin_width: f64) -> Result<Description> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::invalid(format!("bin width must be positive, got {bin_width}")));
    }
    if table.n_rows() == 0 {
        return Err(Error::invalid("table has no rows"));
    }
    let mut level_means = Vec::new();
    for (name, column) in table.column_names.iter().zip(&table.columns) {
        let Column::Categorical { levels, codes } = column else {
            continue;
        };
        let mut sums = vec![0.0; levels.len()];
        let mut counts = vec![0usize; levels.len()];
        for (&code, &d) in codes.iter().zip(&table.durations) {
            sums[code] += d;
            counts[code] += 1;
        }
        for (k, level) in levels.iter().enumerate() {
            level_means.push(LevelMean {
                variable: name.clone(),
                level: level.clone(),
                count: counts[k],
                mean: (counts[k] > 0).then(|| sums[k] / counts[k] as f64),
            });
        }
    }
    let max = table.durations.iter().copied().fold(0.0, f64::max);
    let n_bins = (max / bin_width).floor() as usize + 1;
    let mut counts = vec![0usize; n_bins];
    for &d in &table.durations {
        counts[((d / bin_width).floor() as usize).min(n_bins - 1)] += 1;
    }
    Ok(Description {
        level_means,
        histogram: Histogram { bin_width, counts },
    })
}

impl Description {
    /// `variable / level / mean wait` table, one decimal, variables grouped.
    pub fn level_table_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28} {:<24} {:>14}", "Variable", "Level", "Wait Time (s)");
        let mut last = None;
        for m in &self.level_means {
            let variable = if last == Some(&m.variable) { "" } else { m.variable.as_str() };
            last = Some(&m.variable);
            let mean = m.mean.map_or_else(|| "NA".to_string(), |v| format!("{v:.1}"));
            let _ = writeln!(out, "{variable:<28} {:<24} {mean:>14}", m.level);
        }
        out
    }

    pub fn level_table_csv(&self) -> String {
        let mut out = String::from("variable,level,count,mean_wait\n");
        for m in &self.level_means {
            let mean = m.mean.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                csv_field(&m.variable),
                csv_field(&m.level),
                m.count,
                mean
            );
        }
        out
    }
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{}",
                k as f64 * self.bin_width,
                (k + 1) as f64 * self.bin_width,
                c
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let total: usize = self.counts.iter().sum();
        let peak = self.counts.iter().copied().max().unwrap_or(0).max(1);
        let mut out = String::new();
        for (k, &c) in self.counts.iter().enumerate() {
            let bar = "#".repeat((c * 50).div_ceil(peak));
            let share = 100.0 * c as f64 / total as f64;
            let _ = writeln!(
                out,
                "[{:>7.1}, {:>7.1}) {:>6} {:>5.1}% {}",
                k as f64 * self.bin_width,
                (k + 1) as f64 * self.bin_width,
                c,
                share,
                bar
            );
        }
        out
    }
}

pub(crate) fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(levels: &[&str], codes: Vec<usize>, durations: Vec<f64>) -> RawTable {
        let n = durations.len();
        RawTable {
            column_names: vec!["Gender".into()],
            columns: vec![Column::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
                codes,
            }],
            duration_column: "wait".into(),
            event_column: "crossed".into(),
            durations,
            events: vec![true; n],
        }
    }

    #[test]
    fn level_means() {
        let d = describe(&table(&["Male", "Female"], vec![0, 1, 0], vec![4.0, 7.0, 6.0]), 1.0).unwrap();
        assert_eq!(d.level_means[0].mean, Some(5.0));
        assert_eq!(d.level_means[1].mean, Some(7.0));
        let text = d.level_table_text();
        assert!(text.contains("Gender"), "{text}");
        assert!(text.contains("5.0") && text.contains("7.0"));
    }

    #[test]
    fn empty_level_is_absent() {
        let d = describe(&table(&["Male", "Female", "Other"], vec![0, 1], vec![4.0, 7.0]), 1.0).unwrap();
        assert_eq!(d.level_means[2].mean, None);
        assert!(d.level_table_csv().contains("Gender,Other,0,\n"));
        assert!(d.level_table_text().contains("NA"));
    }

    #[test]
    fn histogram_counts_all_rows() {
        let durations = vec![0.2, 0.9, 1.0, 1.5, 3.99, 4.0, 9.5];
        let t = table(&["a"], vec![0; 7], durations.clone());
        let one = describe(&t, 1.0).unwrap().histogram;
        assert_eq!(one.counts.iter().sum::<usize>(), durations.len());
        assert_eq!(one.counts[0], 2);
        assert_eq!(one.counts.len(), 10);
        let two = describe(&t, 2.0).unwrap().histogram;
        assert_eq!(two.counts.len(), 5);
        assert!(one.to_csv().starts_with("bin_start,bin_end,count\n0,1,2\n"));
        assert!(describe(&t, 0.0).is_err());
    }

    #[test]
    fn means_match_streaming_pass() {
        let codes: Vec<usize> = (0..97).map(|i| (i * 7) % 3).collect();
        let durations: Vec<f64> = (0..97).map(|i| 0.1 + (i as f64 * 0.37) % 11.0).collect();
        let d = describe(&table(&["a", "b", "c"], codes.clone(), durations.clone()), 1.0).unwrap();
        for (k, m) in d.level_means.iter().enumerate() {
            let (mut sum, mut n) = (0.0, 0usize);
            for (c, v) in codes.iter().zip(&durations) {
                if *c == k {
                    sum += v;
                    n += 1;
                }
            }
            assert_eq!(m.mean, Some(sum / n as f64));
        }
    }
}
