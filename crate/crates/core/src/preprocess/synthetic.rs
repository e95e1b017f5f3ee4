use std::fmt::Write as _;

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node,
    Value,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::kv::{split_list, KvFile, KvWriter};
use crate::survival::SurvivalDataset;

use super::table::{ColumnType, Schema};

/// True log-risk as a function of the features `x1..xd`.
#[derive(Debug, Clone, PartialEq)]
pub enum TrueRisk {
    Linear(Vec<f64>),
    /// `scale · x1 · x2`.
    Interaction { scale: f64 },
    /// Arithmetic expression over `x1..xd` (`math::sin(x1)`, `x1^2`, ...).
    Expression(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    /// Constant hazard `rate`.
    Exponential { rate: f64 },
    /// Cumulative hazard `(t / scale)^shape`.
    Weibull { shape: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub risk: TrueRisk,
    pub baseline: Baseline,
    /// Expected share of right-censored samples, in `[0, 1)`.
    pub censoring_rate: f64,
    pub seed: u64,
}

/// What generated a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub risk: Vec<f64>,
    pub event_times: Vec<f64>,
    /// `+inf` when censoring is disabled.
    pub censor_times: Vec<f64>,
    /// Rate of the exponential censoring distribution (0 when disabled).
    pub censoring_hazard: f64,
    pub coefficients: Option<Vec<f64>>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::invalid("synthetic data needs at least 2 samples"));
        }
        if self.n_features == 0 {
            return Err(Error::invalid("synthetic data needs at least 1 feature"));
        }
        if !(0.0..1.0).contains(&self.censoring_rate) {
            return Err(Error::invalid(format!(
                "censoring rate {} is unsatisfiable; it must lie in [0, 1)",
                self.censoring_rate
            )));
        }
        match &self.risk {
            TrueRisk::Linear(beta) if beta.len() != self.n_features => {
                return Err(Error::invalid(format!(
                    "{} coefficients for {} features",
                    beta.len(),
                    self.n_features
                )))
            }
            TrueRisk::Interaction { .. } if self.n_features < 2 => {
                return Err(Error::invalid("interaction risk needs at least 2 features"))
            }
            _ => {}
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let ok = match self.baseline {
            Baseline::Exponential { rate } => positive(rate),
            Baseline::Weibull { shape, scale } => positive(shape) && positive(scale),
        };
        if !ok {
            return Err(Error::invalid("baseline parameters must be positive"));
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        (1..=self.n_features).map(|j| format!("x{j}")).collect()
    }

    /// Schema matching the CSV written for a generated dataset.
    pub fn schema(&self) -> Schema {
        Schema {
            duration: "duration".into(),
            event: "event".into(),
            columns: self
                .feature_names()
                .into_iter()
                .map(|n| (n, ColumnType::Numeric))
                .collect(),
            ignore: vec![],
        }
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let risk_entry = kv.require("risk")?;
        let (kind, args) = match risk_entry.value.split_once(':') {
            Some((k, a)) => (k.trim(), a.trim()),
            None => (risk_entry.value.trim(), ""),
        };
        let risk = match kind {
            "linear" => TrueRisk::Linear(kv.parse_list(&crate::kv::Entry {
                value: args.to_string(),
                ..risk_entry.clone()
            })?),
            "interaction" => TrueRisk::Interaction {
                scale: if args.is_empty() {
                    1.0
                } else {
                    args.parse().map_err(|_| kv.error(risk_entry, "bad interaction scale"))?
                },
            },
            "expression" => TrueRisk::Expression(args.to_string()),
            _ => return Err(kv.error(risk_entry, "expected linear, interaction or expression")),
        };
        let base_entry = kv.require("baseline")?;
        let (kind, args) = base_entry
            .value
            .split_once(':')
            .ok_or_else(|| kv.error(base_entry, "expected 'exponential: rate' or 'weibull: shape, scale'"))?;
        let params: Vec<f64> = split_list(args)
            .map(|s| s.parse().map_err(|_| kv.error(base_entry, format!("bad number '{s}'"))))
            .collect::<Result<_>>()?;
        let baseline = match (kind.trim(), params.as_slice()) {
            ("exponential", &[rate]) => Baseline::Exponential { rate },
            ("weibull", &[shape, scale]) => Baseline::Weibull { shape, scale },
            _ => return Err(kv.error(base_entry, "expected 'exponential: rate' or 'weibull: shape, scale'")),
        };
        let spec = Self {
            n_samples: kv.parse_required("n_samples")?,
            n_features: kv.parse_required("n_features")?,
            risk,
            baseline,
            censoring_rate: kv.parse_or("censoring", 0.0)?,
            seed: kv.parse_or("seed", 0)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.put("n_samples", self.n_samples).put("n_features", self.n_features);
        match &self.risk {
            TrueRisk::Linear(beta) => {
                let list: Vec<String> = beta.iter().map(f64::to_string).collect();
                w.put("risk", format!("linear: {}", list.join(", ")))
            }
            TrueRisk::Interaction { scale } => w.put("risk", format!("interaction: {scale}")),
            TrueRisk::Expression(e) => w.put("risk", format!("expression: {e}")),
        };
        match self.baseline {
            Baseline::Exponential { rate } => w.put("baseline", format!("exponential: {rate}")),
            Baseline::Weibull { shape, scale } => {
                w.put("baseline", format!("weibull: {shape}, {scale}"))
            }
        };
        w.put("censoring", self.censoring_rate).put("seed", self.seed);
        w.finish()
    }
}

fn true_risk(spec: &SyntheticSpec, x: &Array2<f64>) -> Result<Vec<f64>> {
    let n = x.nrows();
    let risk: Vec<f64> = match &spec.risk {
        TrueRisk::Linear(beta) => (0..n)
            .map(|i| x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect(),
        TrueRisk::Interaction { scale } => (0..n).map(|i| scale * x[[i, 0]] * x[[i, 1]]).collect(),
        TrueRisk::Expression(text) => {
            let tree: Node<DefaultNumericTypes> = build_operator_tree(text)
                .map_err(|e| Error::invalid(format!("risk expression: {e}")))?;
            let names = spec.feature_names();
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                for (j, name) in names.iter().enumerate() {
                    ctx.set_value(name.clone(), Value::Float(x[[i, j]]))
                        .map_err(|e| Error::invalid(format!("risk expression: {e}")))?;
                }
                out.push(
                    tree.eval_number_with_context(&ctx)
                        .map_err(|e| Error::invalid(format!("risk expression: {e}")))?,
                );
            }
            out
        }
    };
    if let Some(i) = risk.iter().position(|h| !h.is_finite()) {
        return Err(Error::NonFinite(format!("true risk of sample {i}")));
    }
    Ok(risk)
}

/// Expected censored share when censoring times are `Exp(rate)`, given the
/// latent event times.
fn expected_censored(event_times: &[f64], rate: f64) -> f64 {
    event_times.iter().map(|&t| -(-rate * t).exp_m1()).sum::<f64>() / event_times.len() as f64
}

fn solve_censoring_rate(event_times: &[f64], target: f64) -> Result<f64> {
    let mut hi = 1.0 / event_times.iter().sum::<f64>() * event_times.len() as f64;
    let mut doublings = 0;
    while expected_censored(event_times, hi) < target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::invalid(format!("censoring rate {target} is unsatisfiable")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected_censored(event_times, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draws features i.i.d. standard normal, event times from the baseline
/// scaled by `exp(true risk)`, and independent exponential censoring whose
/// rate is solved to hit the target censored share in expectation.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(SurvivalDataset<f64>, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, d) = (spec.n_samples, spec.n_features);
    let mut x = Array2::<f64>::zeros((n, d));
    for v in x.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let risk = true_risk(spec, &x)?;
    let event_times: Vec<f64> = risk
        .iter()
        .map(|&h| {
            let u: f64 = rng.sample(Open01);
            let cumulative = -u.ln() * (-h).exp();
            match spec.baseline {
                Baseline::Exponential { rate } => cumulative / rate,
                Baseline::Weibull { shape, scale } => scale * cumulative.powf(1.0 / shape),
            }
        })
        .collect();
    if let Some(i) = event_times.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::NonFinite(format!(
            "event time of sample {i} (true risk {} out of range)",
            risk[i]
        )));
    }
    let unit: Vec<f64> = (0..n).map(|_| rng.sample(Exp1)).collect();
    let (censoring_hazard, censor_times) = if spec.censoring_rate > 0.0 {
        let rate = solve_censoring_rate(&event_times, spec.censoring_rate)?;
        (rate, unit.iter().map(|e| e / rate).collect())
    } else {
        (0.0, vec![f64::INFINITY; n])
    };
    let mut durations = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for (&t, &c) in event_times.iter().zip(&censor_times) {
        if c < t {
            durations.push(c.max(f64::MIN_POSITIVE));
            events.push(false);
        } else {
            durations.push(t);
            events.push(true);
        }
    }
    let dataset = SurvivalDataset::new(x, spec.feature_names(), durations, events)?;
    Ok((
        dataset,
        GroundTruth {
            risk,
            event_times,
            censor_times,
            censoring_hazard,
            coefficients: match &spec.risk {
                TrueRisk::Linear(beta) => Some(beta.clone()),
                _ => None,
            },
        },
    ))
}

impl GroundTruth {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,true_risk,event_time,censor_time\n");
        for i in 0..self.risk.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                i, self.risk[i], self.event_times[i], self.censor_times[i]
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.put("censoring_hazard", self.censoring_hazard);
        let censored = self
            .event_times
            .iter()
            .zip(&self.censor_times)
            .filter(|(t, c)| c < t)
            .count();
        w.put("realized_censoring", censored as f64 / self.risk.len() as f64);
        if let Some(beta) = &self.coefficients {
            w.put_list("coefficients", beta);
        }
        w.finish()
    }
}
