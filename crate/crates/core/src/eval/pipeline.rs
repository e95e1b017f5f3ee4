use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::deep::{train, NetworkConfig, RiskNetwork, TrainingReport};
use crate::error::{Error, Result};
use crate::kv::{KvFile, KvWriter};
use crate::linear::{backward_eliminate, fit, predict_risk, FitOptions, LinearCphFit};
use crate::preprocess::{vif_screen, Standardizer};
use crate::relieff::{rank_dataset, FeatureRanking, ReliefConfig};
use crate::scalar::Scalar;
use crate::survival::{RiskScores, SurvivalDataset};

use super::cindex::c_index;
use super::cv::Pipeline;
use super::seed::derive_seed;

const BUNDLE_FORMAT: &str = "coxnet-model 1";

/// Per-split standardization followed by the linear Cox model, optionally
/// preceded by VIF screening and followed by backward elimination.
#[derive(Debug, Clone, Default)]
pub struct LinearPipeline {
    pub options: FitOptions,
    pub vif_threshold: Option<f64>,
    pub elimination_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    /// Columns the model was fitted on, before any screening.
    pub input_features: Vec<String>,
    pub standardizer: Standardizer<T>,
    pub fit: LinearCphFit<T>,
}

impl<T: Scalar> Pipeline<T> for LinearPipeline {
    type Model = LinearModel<T>;

    fn fit(&self, train: &SurvivalDataset<T>, _seed: u64) -> Result<LinearModel<T>> {
        let standardizer = Standardizer::fit(train.features());
        let mut z = standardizer.transform_dataset(train)?;
        if let Some(threshold) = self.vif_threshold {
            let screening = vif_screen(&z, threshold)?;
            z = z.select_named(&screening.retained)?;
        }
        let fit = match self.elimination_alpha {
            Some(alpha) => backward_eliminate(&z, alpha, &self.options)?.0,
            None => fit(&z, &self.options)?,
        };
        Ok(LinearModel {
            input_features: train.feature_names().to_vec(),
            standardizer,
            fit,
        })
    }

    fn score(&self, model: &LinearModel<T>, data: &SurvivalDataset<T>) -> Result<RiskScores<T>> {
        model.score(data)
    }
}

impl<T: Scalar> LinearModel<T> {
    pub fn score(&self, data: &SurvivalDataset<T>) -> Result<RiskScores<T>> {
        let z = standardized_inputs(data, &self.input_features, &self.standardizer)?;
        let selected = z.select_named(&self.fit.feature_names)?;
        predict_risk(&self.fit, selected.features())
    }
}

/// Feature ranking, top-n selection and network training, all on the
/// training split. A seeded share of the training rows is held out to pick
/// the best epoch, so validation folds never influence the model.
#[derive(Debug, Clone)]
pub struct DeepPipeline {
    /// `n_inputs` is the number of top-ranked features kept.
    pub network: NetworkConfig,
    pub relief: ReliefConfig,
    /// Share of training rows used for best-epoch selection; 0 trains on all
    /// rows and keeps the final epoch.
    pub early_stopping_fraction: f64,
}

impl DeepPipeline {
    pub fn new(network: NetworkConfig) -> Self {
        Self {
            network,
            relief: ReliefConfig::default(),
            early_stopping_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepModel<T> {
    pub input_features: Vec<String>,
    pub standardizer: Standardizer<T>,
    pub ranking: FeatureRanking,
    pub network: RiskNetwork<T>,
    pub report: Option<TrainingReport<T>>,
}

impl<T: Scalar> DeepModel<T> {
    pub fn selected_features(&self) -> Result<Vec<String>> {
        self.ranking.select_top_n(self.network.config().n_inputs)
    }

    pub fn score(&self, data: &SurvivalDataset<T>) -> Result<RiskScores<T>> {
        let z = standardized_inputs(data, &self.input_features, &self.standardizer)?;
        let selected = z.select_named(&self.selected_features()?)?;
        self.network.predict(selected.features())
    }
}

/// Rows `(train, holdout)` for early stopping; the holdout must contain a
/// comparable pair and the rest an event.
fn early_stopping_split<T: Scalar>(
    data: &SurvivalDataset<T>,
    fraction: f64,
    seed: u64,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let n = data.n_samples();
    let n_hold = (fraction * n as f64).round() as usize;
    if n_hold < 2 || n_hold >= n {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..n).collect();
    for _ in 0..100 {
        rows.shuffle(&mut rng);
        let mut hold = rows[..n_hold].to_vec();
        let mut rest = rows[n_hold..].to_vec();
        hold.sort_unstable();
        rest.sort_unstable();
        let h = data.select_rows(&hold);
        let ok_hold = c_index(h.durations(), h.events(), &vec![T::zero(); n_hold]).is_ok();
        let ok_rest = rest.iter().any(|&i| data.events()[i]);
        if ok_hold && ok_rest {
            return Some((rest, hold));
        }
    }
    None
}

impl<T: Scalar> Pipeline<T> for DeepPipeline {
    type Model = DeepModel<T>;

    fn fit(&self, train_data: &SurvivalDataset<T>, seed: u64) -> Result<DeepModel<T>> {
        if !(0.0..1.0).contains(&self.early_stopping_fraction) {
            return Err(Error::invalid(format!(
                "early-stopping fraction {} not in [0, 1)",
                self.early_stopping_fraction
            )));
        }
        let n_inputs = self.network.n_inputs;
        if n_inputs > train_data.n_features() {
            return Err(Error::invalid(format!(
                "cannot keep {n_inputs} of {} features",
                train_data.n_features()
            )));
        }
        let standardizer = Standardizer::fit(train_data.features());
        let z = standardizer.transform_dataset(train_data)?;
        let relief = ReliefConfig {
            seed: derive_seed(seed, 0),
            ..self.relief.clone()
        };
        let ranking = rank_dataset(&z, &relief)?;
        let selected = z.select_named(&ranking.select_top_n(n_inputs)?)?;

        let config = NetworkConfig {
            seed: derive_seed(seed, 1),
            ..self.network.clone()
        };
        let net = RiskNetwork::init(config)?;
        let split = if self.early_stopping_fraction > 0.0 {
            early_stopping_split(&selected, self.early_stopping_fraction, derive_seed(seed, 2))
        } else {
            None
        };
        let (network, report) = match split {
            Some((rest, hold)) => train(
                net,
                &selected.select_rows(&rest),
                Some(&selected.select_rows(&hold)),
            )?,
            None => train(net, &selected, None)?,
        };
        Ok(DeepModel {
            input_features: train_data.feature_names().to_vec(),
            standardizer,
            ranking,
            network,
            report: Some(report),
        })
    }

    fn score(&self, model: &DeepModel<T>, data: &SurvivalDataset<T>) -> Result<RiskScores<T>> {
        model.score(data)
    }
}

fn standardized_inputs<T: Scalar>(
    data: &SurvivalDataset<T>,
    inputs: &[String],
    standardizer: &Standardizer<T>,
) -> Result<SurvivalDataset<T>> {
    standardizer.transform_dataset(&data.select_named(inputs)?)
}

/// A fitted model of either kind, as stored in a model directory.
#[derive(Debug, Clone, PartialEq)]
pub enum Model<T> {
    Linear(LinearModel<T>),
    Deep(DeepModel<T>),
}

impl<T: Scalar> Model<T> {
    pub fn score(&self, data: &SurvivalDataset<T>) -> Result<RiskScores<T>> {
        match self {
            Model::Linear(m) => m.score(data),
            Model::Deep(m) => m.score(data),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Linear(_) => "linear",
            Model::Deep(_) => "deep",
        }
    }

    /// Features the model actually uses.
    pub fn used_features(&self) -> Result<Vec<String>> {
        match self {
            Model::Linear(m) => Ok(m.fit.feature_names.clone()),
            Model::Deep(m) => m.selected_features(),
        }
    }

    /// Writes `model.txt` plus `linear.txt`, or `network.txt` and
    /// `ranking.csv`, into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut w = KvWriter::new();
        w.put("format", BUNDLE_FORMAT).put("kind", self.kind());
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        match self {
            Model::Linear(m) => {
                w.put_list("inputs", &m.input_features);
                m.standardizer.write_kv(&mut w, "standardize");
                write("linear.txt", m.fit.to_text())?;
            }
            Model::Deep(m) => {
                w.put_list("inputs", &m.input_features);
                m.standardizer.write_kv(&mut w, "standardize");
                write("network.txt", m.network.to_text())?;
                write("ranking.csv", m.ranking.to_csv())?;
            }
        }
        write("model.txt", w.finish())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let kv = KvFile::read(&dir.join("model.txt"))?;
        let format = kv.require("format")?;
        if format.value != BUNDLE_FORMAT {
            return Err(kv.error(format, "unsupported model format"));
        }
        let input_features: Vec<String> = kv.parse_list(kv.require("inputs")?)?;
        let standardizer = Standardizer::read_kv(&kv, "standardize")?;
        if standardizer.means.len() != input_features.len() {
            return Err(Error::invalid("standardizer width differs from the input list"));
        }
        let kind = kv.require("kind")?;
        match kind.value.as_str() {
            "linear" => Ok(Model::Linear(LinearModel {
                input_features,
                standardizer,
                fit: LinearCphFit::from_kv(&KvFile::read(&dir.join("linear.txt"))?)?,
            })),
            "deep" => {
                let model = DeepModel {
                    input_features,
                    standardizer,
                    ranking: FeatureRanking::read_csv(&dir.join("ranking.csv"))?,
                    network: RiskNetwork::load(&dir.join("network.txt"))?,
                    report: None,
                };
                model.selected_features()?;
                Ok(Model::Deep(model))
            }
            other => Err(kv.error(kind, format!("unknown model kind '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{generate_synthetic, Baseline, SyntheticSpec, TrueRisk};

    fn data(n: usize, d: usize, seed: u64) -> SurvivalDataset<f64> {
        let mut coef = vec![0.0; d];
        coef[0] = 1.0;
        coef[1] = -0.7;
        let spec = SyntheticSpec {
            n_samples: n,
            n_features: d,
            risk: TrueRisk::Linear(coef),
            baseline: Baseline::Exponential { rate: 0.1 },
            censoring_rate: 0.2,
            seed,
        };
        generate_synthetic(&spec).unwrap().0
    }

    fn deep() -> DeepPipeline {
        DeepPipeline::new(NetworkConfig {
            n_inputs: 2,
            hidden_layers: vec![8],
            dropout_rate: 0.1,
            learning_rate: 1e-3,
            epochs: 40,
            ..Default::default()
        })
    }

    #[test]
    fn linear_pipeline_recovers_signal() {
        let ds = data(500, 4, 1);
        let p = LinearPipeline {
            elimination_alpha: Some(0.05),
            vif_threshold: Some(5.0),
            ..Default::default()
        };
        let model = Pipeline::<f64>::fit(&p, &ds, 0).unwrap();
        assert!(model.fit.feature_names.contains(&"x1".to_string()));
        let scores = model.score(&ds).unwrap();
        assert!(c_index(ds.durations(), ds.events(), &scores).unwrap() > 0.65);
    }

    #[test]
    fn deep_pipeline_keeps_ranked_features() {
        let ds = data(300, 5, 2);
        let model = Pipeline::<f64>::fit(&deep(), &ds, 4).unwrap();
        let used = model.selected_features().unwrap();
        assert_eq!(used.len(), 2);
        assert_eq!(used, model.ranking.names()[..2].to_vec());
        assert!(model.report.as_ref().unwrap().best_epoch.is_some());
        // Same seed, same model.
        assert_eq!(model, Pipeline::<f64>::fit(&deep(), &ds, 4).unwrap());
    }

    #[test]
    fn bundles_round_trip() {
        let ds = data(200, 4, 3);
        let dir = tempfile::tempdir().unwrap();
        let mut lm = Pipeline::<f64>::fit(&LinearPipeline::default(), &ds, 0).unwrap();
        // The optimizer trace is diagnostic and not stored.
        lm.fit.objective_trace.clear();
        let linear = Model::Linear(lm);
        linear.save(&dir.path().join("lin")).unwrap();
        assert_eq!(Model::<f64>::load(&dir.path().join("lin")).unwrap(), linear);

        let Model::Deep(mut m) = Model::Deep(Pipeline::<f64>::fit(&deep(), &ds, 1).unwrap()) else {
            unreachable!()
        };
        m.report = None;
        let model = Model::Deep(m);
        model.save(&dir.path().join("deep")).unwrap();
        let loaded = Model::<f64>::load(&dir.path().join("deep")).unwrap();
        assert_eq!(loaded, model);
        let a = model.score(&ds).unwrap();
        let b = loaded.score(&ds).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn too_many_inputs_is_an_error() {
        let ds = data(100, 3, 4);
        let mut p = deep();
        p.network.n_inputs = 4;
        assert!(Pipeline::<f64>::fit(&p, &ds, 0).is_err());
    }
}
