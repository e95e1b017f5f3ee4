use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub name: String,
    pub weight: f64,
}

/// Features in descending weight order, ties broken by name.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    entries: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn new(mut entries: Vec<RankedFeature>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| !e.weight.is_finite()) {
            return Err(Error::NonFinite(format!("importance weight of '{}'", e.name)));
        }
        entries.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.name.cmp(&b.name)));
        let mut names: Vec<&str> = entries.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.is_empty() || names.len() != entries.len() {
            return Err(Error::invalid("ranking needs distinct, non-empty feature names"));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[RankedFeature] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.weight)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    /// The `n` highest-ranked feature names, in rank order.
    pub fn select_top_n(&self, n: usize) -> Result<Vec<String>> {
        if n == 0 || n > self.entries.len() {
            return Err(Error::invalid(format!(
                "cannot select {n} of {} ranked features",
                self.entries.len()
            )));
        }
        Ok(self.entries[..n].iter().map(|e| e.name.clone()).collect())
    }

    /// Mean weight per feature over several rankings of the same features.
    pub fn average(rankings: &[FeatureRanking]) -> Result<Self> {
        let first = rankings
            .first()
            .ok_or_else(|| Error::invalid("no rankings to average"))?;
        let mut sums: BTreeMap<&str, f64> = first.entries.iter().map(|e| (e.name.as_str(), 0.0)).collect();
        for r in rankings {
            if r.len() != first.len() {
                return Err(Error::invalid("rankings cover different features"));
            }
            for e in &r.entries {
                *sums
                    .get_mut(e.name.as_str())
                    .ok_or_else(|| Error::invalid(format!("feature '{}' missing from a ranking", e.name)))? +=
                    e.weight;
            }
        }
        let k = rankings.len() as f64;
        Self::new(
            sums.into_iter()
                .map(|(name, s)| RankedFeature {
                    name: name.to_string(),
                    weight: s / k,
                })
                .collect(),
        )
    }

    /// `rank,feature,weight` with 1-based ranks.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,feature,weight\n");
        for (i, e) in self.entries.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, crate::preprocess::csv_field(&e.name), e.weight);
        }
        out
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::invalid(format!("{}: {other:?}", path.display())),
        })?;
        let mut entries = Vec::new();
        for record in reader.records() {
            let record = record?;
            let (Some(name), Some(weight)) = (record.get(1), record.get(2)) else {
                return Err(Error::invalid(format!("{}: expected rank,feature,weight", path.display())));
            };
            let weight = weight
                .parse()
                .map_err(|_| Error::invalid(format!("{}: bad weight '{weight}'", path.display())))?;
            entries.push(RankedFeature {
                name: name.to_string(),
                weight,
            });
        }
        Self::new(entries)
    }
}
