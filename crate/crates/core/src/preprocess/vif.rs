use ndarray::{Array1, Axis};

use crate::error::{Error, Result};
use crate::linalg::projection_residual;
use crate::scalar::Scalar;
use crate::survival::SurvivalDataset;

pub const DEFAULT_VIF_THRESHOLD: f64 = 5.0;

/// Variance inflation factor of every feature: `1 / (1 - R²)` of the
/// least-squares regression of that feature on all others plus an intercept.
/// Exactly collinear features get `+inf`.
pub fn vif<T: Scalar>(dataset: &SurvivalDataset<T>) -> Result<Vec<T>> {
    let (n, p) = dataset.features().dim();
    if n <= p {
        return Err(Error::invalid(format!(
            "VIF needs more samples than features ({n} samples, {p} features)"
        )));
    }
    let nt = T::of_usize(n);
    let centered: Vec<Array1<T>> = dataset
        .features()
        .axis_iter(Axis(1))
        .map(|c| {
            let mean = c.iter().copied().sum::<T>() / nt;
            c.mapv(|v| v - mean)
        })
        .collect();
    let tol = T::of(1e-10);
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let total = centered[j].dot(&centered[j]);
        if total == T::zero() {
            return Err(Error::invalid(format!(
                "feature '{}' is constant",
                dataset.feature_names()[j]
            )));
        }
        let others: Vec<_> = (0..p).filter(|&k| k != j).map(|k| centered[k].view()).collect();
        let residual = projection_residual(centered[j].view(), &others, tol);
        out.push(if residual <= tol * total {
            T::infinity()
        } else {
            total / residual
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VifScreening {
    /// Removed features in removal order, with their VIF at removal time
    /// (`None` for constant columns dropped up front).
    pub removed: Vec<(String, Option<f64>)>,
    pub retained: Vec<String>,
    /// VIF of each retained feature after screening.
    pub final_vifs: Vec<f64>,
}

/// Iteratively removes the feature with the largest VIF while it exceeds
/// `threshold`, recomputing after each removal. Equal VIFs remove the later
/// column. Constant columns are dropped first.
pub fn vif_screen<T: Scalar>(dataset: &SurvivalDataset<T>, threshold: f64) -> Result<VifScreening> {
    let mut removed = Vec::new();
    let mut keep: Vec<usize> = Vec::new();
    for (j, column) in dataset.features().axis_iter(Axis(1)).enumerate() {
        let first = column[0];
        if column.iter().all(|&v| v == first) {
            removed.push((dataset.feature_names()[j].clone(), None));
        } else {
            keep.push(j);
        }
    }
    loop {
        if keep.is_empty() {
            return Ok(VifScreening {
                removed,
                retained: Vec::new(),
                final_vifs: Vec::new(),
            });
        }
        let sub = dataset.select_columns(&keep);
        let values: Vec<f64> = vif(&sub)?.into_iter().map(Scalar::as_f64).collect();
        let (worst, &worst_vif) = values
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if *cur.1 >= *best.1 { cur } else { best });
        if worst_vif > threshold {
            removed.push((dataset.feature_names()[keep[worst]].clone(), Some(worst_vif)));
            keep.remove(worst);
        } else {
            return Ok(VifScreening {
                removed,
                retained: keep.iter().map(|&j| dataset.feature_names()[j].clone()).collect(),
                final_vifs: values,
            });
        }
    }
}
