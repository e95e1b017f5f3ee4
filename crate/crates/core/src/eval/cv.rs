use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::survival::{RiskScores, SurvivalDataset};

use super::cindex::c_index;
use super::kfold::{complement, kfold_split};
use super::seed::derive_seed;

/// Everything fitted from training rows, and how the result scores new rows.
///
/// `fit` must depend only on its arguments: feature ranking, selection and
/// standardization all happen inside it, on the training split.
pub trait Pipeline<T: Scalar>: Sync {
    type Model: Send;

    fn fit(&self, train: &SurvivalDataset<T>, seed: u64) -> Result<Self::Model>;

    fn score(&self, model: &Self::Model, data: &SurvivalDataset<T>) -> Result<RiskScores<T>>;
}

#[derive(Debug, Clone)]
pub struct FoldResult<M> {
    pub fold: usize,
    pub validation_rows: Vec<usize>,
    pub c_index: f64,
    pub model: M,
}

/// Fits on each fold's complement and scores the fold. Folds run in
/// parallel; fold `f` is fitted with `derive_seed(seed, f)`.
pub fn cross_validate_folds<T, P>(
    pipeline: &P,
    dataset: &SurvivalDataset<T>,
    folds: &[Vec<usize>],
    seed: u64,
) -> Result<Vec<FoldResult<P::Model>>>
where
    T: Scalar,
    P: Pipeline<T>,
{
    let n = dataset.n_samples();
    folds
        .par_iter()
        .enumerate()
        .map(|(f, rows)| {
            let run = || -> Result<FoldResult<P::Model>> {
                let train = dataset.select_rows(&complement(n, rows));
                let validation = dataset.select_rows(rows);
                let model = pipeline.fit(&train, derive_seed(seed, f as u64))?;
                let scores = pipeline.score(&model, &validation)?;
                scores.check_len(validation.n_samples())?;
                let c = c_index(validation.durations(), validation.events(), &scores)?;
                Ok(FoldResult {
                    fold: f,
                    validation_rows: rows.clone(),
                    c_index: c,
                    model,
                })
            };
            run().map_err(|e| Error::Fold {
                fold: f + 1,
                source: Box::new(e),
            })
        })
        .collect::<Vec<_>>()
        // Sequential collect reports the lowest failing fold.
        .into_iter()
        .collect()
}

/// Validation C-index of every fold of a seeded `k`-fold split.
pub fn cross_validate<T, P>(pipeline: &P, dataset: &SurvivalDataset<T>, k: usize, seed: u64) -> Result<Vec<f64>>
where
    T: Scalar,
    P: Pipeline<T>,
{
    let folds = kfold_split(dataset.events(), k, seed)?;
    Ok(cross_validate_folds(pipeline, dataset, &folds, seed)?
        .into_iter()
        .map(|r| r.c_index)
        .collect())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{generate_synthetic, Baseline, SyntheticSpec, TrueRisk};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(seed: u64) -> (SurvivalDataset<f64>, Vec<f64>) {
        let spec = SyntheticSpec {
            n_samples: 2000,
            n_features: 3,
            risk: TrueRisk::Linear(vec![1.0, -0.5, 0.0]),
            baseline: Baseline::Exponential { rate: 0.1 },
            censoring_rate: 0.3,
            seed,
        };
        let (ds, truth) = generate_synthetic(&spec).unwrap();
        (ds, truth.risk)
    }

    /// Scores rows by the generator's true risk, looked up by the first
    /// feature value (continuous, hence unique).
    struct Oracle(Vec<(f64, f64)>);

    impl Pipeline<f64> for Oracle {
        type Model = ();
        fn fit(&self, _: &SurvivalDataset<f64>, _: u64) -> Result<()> {
            Ok(())
        }
        fn score(&self, _: &(), data: &SurvivalDataset<f64>) -> Result<RiskScores<f64>> {
            RiskScores::new(
                data.features()
                    .column(0)
                    .iter()
                    .map(|x| self.0.iter().find(|(k, _)| k == x).unwrap().1)
                    .collect(),
            )
        }
    }

    struct Random;

    impl Pipeline<f64> for Random {
        type Model = u64;
        fn fit(&self, _: &SurvivalDataset<f64>, seed: u64) -> Result<u64> {
            Ok(seed)
        }
        fn score(&self, seed: &u64, data: &SurvivalDataset<f64>) -> Result<RiskScores<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            RiskScores::new((0..data.n_samples()).map(|_| rng.random()).collect())
        }
    }

    fn brute_force(t: &[f64], e: &[bool], s: &[f64]) -> f64 {
        let (mut w, mut c) = (0.0, 0usize);
        for i in 0..t.len() {
            for j in 0..t.len() {
                if e[i] && t[i] < t[j] {
                    c += 1;
                    w += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        w / c as f64
    }

    #[test]
    fn oracle_pipeline_matches_true_risk_concordance() {
        let (ds, risk) = data(1);
        let lookup: Vec<(f64, f64)> = ds.features().column(0).iter().copied().zip(risk.iter().copied()).collect();
        let folds = kfold_split(ds.events(), 10, 3).unwrap();
        let results = cross_validate_folds(&Oracle(lookup), &ds, &folds, 3).unwrap();
        for r in &results {
            let v = ds.select_rows(&r.validation_rows);
            let truth: Vec<f64> = r.validation_rows.iter().map(|&i| risk[i]).collect();
            let want = brute_force(v.durations(), v.events(), &truth);
            assert!((r.c_index - want).abs() <= 0.03);
        }
    }

    #[test]
    fn random_scores_are_at_chance() {
        let (ds, _) = data(2);
        let c = cross_validate(&Random, &ds, 10, 4).unwrap();
        assert!((mean(&c) - 0.5).abs() < 0.05, "{}", mean(&c));
        assert_eq!(c, cross_validate(&Random, &ds, 10, 4).unwrap());
    }

    struct Failing;

    impl Pipeline<f64> for Failing {
        type Model = ();
        fn fit(&self, train: &SurvivalDataset<f64>, _: u64) -> Result<()> {
            if train.n_samples() < 1900 { Err(Error::invalid("boom")) } else { Ok(()) }
        }
        fn score(&self, _: &(), data: &SurvivalDataset<f64>) -> Result<RiskScores<f64>> {
            RiskScores::new(vec![0.0; data.n_samples()])
        }
    }

    #[test]
    fn errors_carry_the_fold() {
        let (ds, _) = data(5);
        let err = cross_validate(&Failing, &ds, 5, 0).unwrap_err();
        assert!(matches!(err, Error::Fold { .. }));
        assert!(err.to_string().contains("fold 1"), "{err}");
    }
}
