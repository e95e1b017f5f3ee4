use std::collections::HashSet;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Covariates, observed durations and event indicators for a set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset<T> {
    features: Array2<T>,
    feature_names: Vec<String>,
    durations: Vec<T>,
    events: Vec<bool>,
}

impl<T: Scalar> SurvivalDataset<T> {
    pub fn new(
        features: Array2<T>,
        feature_names: Vec<String>,
        durations: Vec<T>,
        events: Vec<bool>,
    ) -> Result<Self> {
        let (rows, cols) = features.dim();
        if feature_names.len() != cols {
            return Err(Error::invalid(format!(
                "{} feature names for {} feature columns",
                feature_names.len(),
                cols
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name '{name}'")));
            }
        }
        if durations.len() != rows || events.len() != rows {
            return Err(Error::invalid(format!(
                "{} rows of features but {} durations and {} events",
                rows,
                durations.len(),
                events.len()
            )));
        }
        if let Some(i) = durations.iter().position(|d| !(d.is_finite() && *d > T::zero())) {
            return Err(Error::invalid(format!(
                "duration of sample {i} is {}, must be positive and finite",
                durations[i]
            )));
        }
        if let Some(((r, c), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!("features at row {r}, column {c}")));
        }
        Ok(Self {
            features,
            feature_names,
            durations,
            events,
        })
    }

    pub fn features(&self) -> ArrayView2<'_, T> {
        self.features.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.features.row(i)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn durations(&self) -> &[T] {
        &self.durations
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn n_samples(&self) -> usize {
        self.durations.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Errors with [`Error::NoEvents`] unless at least one event is observed.
    pub fn require_events(&self) -> Result<()> {
        if self.events.iter().any(|&e| e) {
            Ok(())
        } else {
            Err(Error::NoEvents)
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), rows),
            feature_names: self.feature_names.clone(),
            durations: rows.iter().map(|&i| self.durations[i]).collect(),
            events: rows.iter().map(|&i| self.events[i]).collect(),
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(1), columns),
            feature_names: columns
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            durations: self.durations.clone(),
            events: self.events.clone(),
        }
    }

    /// Selects columns by name, in the order given.
    pub fn select_named(&self, names: &[String]) -> Result<Self> {
        let columns = names
            .iter()
            .map(|n| {
                self.feature_index(n)
                    .ok_or_else(|| Error::invalid(format!("unknown feature '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&columns))
    }

    /// Same samples with a replaced covariate matrix.
    pub fn with_features(&self, features: Array2<T>, feature_names: Vec<String>) -> Result<Self> {
        Self::new(
            features,
            feature_names,
            self.durations.clone(),
            self.events.clone(),
        )
    }

    /// Same covariates with replaced outcomes.
    pub fn with_outcomes(&self, durations: Vec<T>, events: Vec<bool>) -> Result<Self> {
        Self::new(
            self.features.clone(),
            self.feature_names.clone(),
            durations,
            events,
        )
    }

    pub fn cast<U: Scalar>(&self) -> SurvivalDataset<U> {
        SurvivalDataset {
            features: self.features.mapv(|v| U::of(v.as_f64())),
            feature_names: self.feature_names.clone(),
            durations: self.durations.iter().map(|d| U::of(d.as_f64())).collect(),
            events: self.events.clone(),
        }
    }
}

/// Log-risk score per sample, the exponent of the proportional-hazards model.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskScores<T>(Vec<T>);

impl<T: Scalar> RiskScores<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("risk score of sample {i}")));
        }
        Ok(Self(values))
    }

    /// Checks that there is one score per sample of `dataset`.
    pub fn check_len(&self, n_samples: usize) -> Result<()> {
        if self.0.len() == n_samples {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{} risk scores for {} samples",
                self.0.len(),
                n_samples
            )))
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T> std::ops::Deref for RiskScores<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}
