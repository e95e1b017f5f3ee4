use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::kv::{KvFile, KvWriter};
use crate::scalar::Scalar;
use crate::survival::SurvivalDataset;

/// Per-column z-scoring fitted on one split and applied to others.
///
/// Columns that are constant in the fitting data are only centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    pub means: Vec<T>,
    pub scales: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(features: ArrayView2<'_, T>) -> Self {
        let n = T::of_usize(features.nrows());
        let mut means = Vec::with_capacity(features.ncols());
        let mut scales = Vec::with_capacity(features.ncols());
        for column in features.axis_iter(Axis(1)) {
            let mean = column.iter().copied().sum::<T>() / n;
            let ss: T = column.iter().map(|&v| (v - mean) * (v - mean)).sum();
            let sd = if features.nrows() > 1 {
                (ss / (n - T::one())).sqrt()
            } else {
                T::zero()
            };
            means.push(mean);
            scales.push(if sd > T::zero() { sd } else { T::one() });
        }
        Self { means, scales }
    }

    pub fn transform(&self, features: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if features.ncols() != self.means.len() {
            return Err(Error::invalid(format!(
                "standardizer fitted on {} columns, got {}",
                self.means.len(),
                features.ncols()
            )));
        }
        let mut out = features.to_owned();
        for (j, mut column) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            column.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn transform_dataset(&self, dataset: &SurvivalDataset<T>) -> Result<SurvivalDataset<T>> {
        dataset.with_features(
            self.transform(dataset.features())?,
            dataset.feature_names().to_vec(),
        )
    }

    pub fn write_kv(&self, w: &mut KvWriter, prefix: &str) {
        w.put_list(&format!("{prefix}.means"), &self.means);
        w.put_list(&format!("{prefix}.scales"), &self.scales);
    }

    pub fn read_kv(kv: &KvFile, prefix: &str) -> Result<Self> {
        let means = kv.parse_list(kv.require(&format!("{prefix}.means"))?)?;
        let scales: Vec<T> = kv.parse_list(kv.require(&format!("{prefix}.scales"))?)?;
        Ok(Self { means, scales })
    }
}
