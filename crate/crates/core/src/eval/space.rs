use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::deep::NetworkConfig;
use crate::error::{Error, Result};
use crate::kv::{split_list, KvFile, KvWriter};
use crate::relieff::ReliefConfig;

use super::seed::derive_seed;

/// Distribution of one searched hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Dist {
    /// Uniform over the listed values; one value fixes the parameter.
    Choice(Vec<f64>),
    Uniform { low: f64, high: f64 },
    LogUniform { low: f64, high: f64 },
    /// Uniform over the integers `low..=high`.
    Int { low: i64, high: i64 },
}

impl Dist {
    /// `0.1`, `16, 32, 75`, `true, false`, `0..0.5` (uniform) or
    /// `1e-4..1e-2 log` (log-uniform). Ranges of integer parameters become
    /// [`Dist::Int`] through [`Dist::integer`].
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        let dist = if let Some((low, high)) = text.split_once("..") {
            let (high, log) = match high.trim().strip_suffix("log") {
                Some(h) => (h, true),
                None => (high, false),
            };
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad bound '{}'", v.trim()));
            let (low, high) = (num(low)?, num(high)?);
            if log {
                Dist::LogUniform { low, high }
            } else {
                Dist::Uniform { low, high }
            }
        } else {
            let values = split_list(text)
                .map(|v| match v {
                    "true" => Ok(1.0),
                    "false" => Ok(0.0),
                    _ => v.parse().map_err(|_| format!("bad value '{v}'")),
                })
                .collect::<std::result::Result<Vec<f64>, String>>()?;
            Dist::Choice(values)
        };
        dist.check()?;
        Ok(dist)
    }

    /// Reinterprets a uniform range with integral bounds as an integer range.
    pub fn integer(self) -> std::result::Result<Self, String> {
        match self {
            Dist::Uniform { low, high } if low.fract() == 0.0 && high.fract() == 0.0 => Ok(Dist::Int {
                low: low as i64,
                high: high as i64,
            }),
            Dist::Uniform { .. } | Dist::LogUniform { .. } => {
                Err(format!("'{self}' must be an integer range such as 1..3"))
            }
            other => Ok(other),
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        match self {
            Dist::Choice(v) if v.is_empty() => Err("empty choice list".into()),
            Dist::Choice(v) if v.iter().any(|x| !x.is_finite()) => Err("non-finite choice".into()),
            Dist::Uniform { low, high } if !(low.is_finite() && high.is_finite() && low <= high) => {
                Err(format!("empty range [{low}, {high}]"))
            }
            Dist::LogUniform { low, high } if !(*low > 0.0 && high.is_finite() && low <= high) => {
                Err(format!("log-uniform range [{low}, {high}] must be positive and ordered"))
            }
            Dist::Int { low, high } if low > high => Err(format!("empty range {low}..={high}")),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Dist::Choice(v) => v[rng.random_range(0..v.len())],
            Dist::Uniform { low, high } => {
                if low == high { *low } else { rng.random_range(*low..*high) }
            }
            Dist::LogUniform { low, high } => {
                if low == high { *low } else { rng.random_range(low.ln()..high.ln()).exp() }
            }
            Dist::Int { low, high } => rng.random_range(*low..=*high) as f64,
        }
    }

    /// Smallest and largest value the distribution can produce.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Dist::Choice(v) => v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x))),
            Dist::Uniform { low, high } | Dist::LogUniform { low, high } => (*low, *high),
            Dist::Int { low, high } => (*low as f64, *high as f64),
        }
    }

    fn integral(&self) -> bool {
        match self {
            Dist::Choice(v) => v.iter().all(|x| x.fract() == 0.0),
            Dist::Int { .. } => true,
            Dist::Uniform { low, high } | Dist::LogUniform { low, high } => low == high && low.fract() == 0.0,
        }
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dist::Choice(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", items.join(", "))
            }
            Dist::Uniform { low, high } => write!(f, "{low}..{high}"),
            Dist::LogUniform { low, high } => write!(f, "{low}..{high} log"),
            Dist::Int { low, high } => write!(f, "{low}..{high}"),
        }
    }
}

/// Ranges for every network hyperparameter and the number of kept features.
/// Every hidden layer of a sampled network has the same width.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub budget: usize,
    pub seed: u64,
    pub n_inputs: Dist,
    pub hidden_layers: Dist,
    pub hidden_width: Dist,
    pub dropout_rate: Dist,
    pub batch_norm: Dist,
    pub learning_rate: Dist,
    pub l2_coefficient: Dist,
    pub lr_decay: Dist,
    pub momentum: Dist,
    pub epochs: Dist,
    pub relief: ReliefConfig,
    pub early_stopping_fraction: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            budget: 100,
            seed: 0,
            n_inputs: Dist::Int { low: 1, high: 10 },
            hidden_layers: Dist::Int { low: 1, high: 3 },
            hidden_width: Dist::Choice(vec![16.0, 32.0, 64.0, 75.0]),
            dropout_rate: Dist::Uniform { low: 0.0, high: 0.5 },
            batch_norm: Dist::Choice(vec![0.0, 1.0]),
            learning_rate: Dist::LogUniform { low: 1e-4, high: 1e-2 },
            l2_coefficient: Dist::LogUniform { low: 1e-5, high: 1e-1 },
            lr_decay: Dist::Choice(vec![0.0, 1e-3]),
            momentum: Dist::Uniform { low: 0.8, high: 0.95 },
            epochs: Dist::Choice(vec![500.0]),
            relief: ReliefConfig::default(),
            early_stopping_fraction: 0.2,
        }
    }
}

const PARAMS: [&str; 10] = [
    "n_inputs",
    "hidden_layers",
    "hidden_width",
    "dropout_rate",
    "batch_norm",
    "learning_rate",
    "l2_coefficient",
    "lr_decay",
    "momentum",
    "epochs",
];

const INTEGER_PARAMS: [&str; 5] = ["n_inputs", "hidden_layers", "hidden_width", "batch_norm", "epochs"];

impl SearchSpace {
    fn dists(&self) -> [&Dist; 10] {
        [
            &self.n_inputs,
            &self.hidden_layers,
            &self.hidden_width,
            &self.dropout_rate,
            &self.batch_norm,
            &self.learning_rate,
            &self.l2_coefficient,
            &self.lr_decay,
            &self.momentum,
            &self.epochs,
        ]
    }

    fn dists_mut(&mut self) -> [&mut Dist; 10] {
        [
            &mut self.n_inputs,
            &mut self.hidden_layers,
            &mut self.hidden_width,
            &mut self.dropout_rate,
            &mut self.batch_norm,
            &mut self.learning_rate,
            &mut self.l2_coefficient,
            &mut self.lr_decay,
            &mut self.momentum,
            &mut self.epochs,
        ]
    }

    /// Missing keys keep the defaults.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let mut space = Self::default();
        space.budget = kv.parse_or("budget", space.budget)?;
        space.seed = kv.parse_or("seed", space.seed)?;
        space.relief.k_neighbors = kv.parse_or("relief_k", space.relief.k_neighbors)?;
        space.relief.sigma = kv.parse_or("relief_sigma", space.relief.sigma)?;
        space.early_stopping_fraction = kv.parse_or("early_stopping_fraction", space.early_stopping_fraction)?;
        for (name, slot) in PARAMS.iter().zip(space.dists_mut()) {
            if let Some(entry) = kv.get(name) {
                let mut dist = Dist::parse(&entry.value).map_err(|m| kv.error(entry, m))?;
                if INTEGER_PARAMS.contains(name) {
                    dist = dist.integer().map_err(|m| kv.error(entry, m))?;
                }
                *slot = dist;
            }
        }
        let known = ["budget", "seed", "relief_k", "relief_sigma", "early_stopping_fraction"];
        if let Some(e) = kv
            .entries()
            .iter()
            .find(|e| !known.contains(&e.key.as_str()) && !PARAMS.contains(&e.key.as_str()))
        {
            return Err(kv.error(e, "unknown search-space key"));
        }
        space.validate().map_err(|e| match e {
            Error::InvalidInput(m) => Error::Config {
                file: kv.name().to_string(),
                line: 0,
                message: m,
            },
            other => other,
        })?;
        Ok(space)
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.put("budget", self.budget)
            .put("seed", self.seed)
            .put("relief_k", self.relief.k_neighbors)
            .put("relief_sigma", self.relief.sigma)
            .put("early_stopping_fraction", self.early_stopping_fraction);
        for (name, dist) in PARAMS.iter().zip(self.dists()) {
            w.put(name, dist);
        }
        w.finish()
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid("search budget must be at least 1"));
        }
        ReliefConfig {
            m_samples: None,
            ..self.relief.clone()
        }
        .validate()?;
        if !(0.0..1.0).contains(&self.early_stopping_fraction) {
            return Err(Error::invalid("early_stopping_fraction must lie in [0, 1)"));
        }
        let in_range = |name: &str, dist: &Dist, ok: &dyn Fn(f64) -> bool, integral: bool| {
            let (lo, hi) = dist.support();
            if !ok(lo) || !ok(hi) || (integral && !dist.integral()) {
                return Err(Error::invalid(format!("search range for {name} ({dist}) is out of bounds")));
            }
            Ok(())
        };
        in_range("n_inputs", &self.n_inputs, &|v| v >= 1.0, true)?;
        in_range("hidden_layers", &self.hidden_layers, &|v| v >= 1.0, true)?;
        in_range("hidden_width", &self.hidden_width, &|v| v >= 1.0, true)?;
        in_range("dropout_rate", &self.dropout_rate, &|v| (0.0..1.0).contains(&v), false)?;
        in_range("batch_norm", &self.batch_norm, &|v| v == 0.0 || v == 1.0, true)?;
        in_range("learning_rate", &self.learning_rate, &|v| v > 0.0, false)?;
        in_range("l2_coefficient", &self.l2_coefficient, &|v| v >= 0.0, false)?;
        in_range("lr_decay", &self.lr_decay, &|v| v >= 0.0, false)?;
        in_range("momentum", &self.momentum, &|v| (0.0..1.0).contains(&v), false)?;
        in_range("epochs", &self.epochs, &|v| v >= 1.0, true)?;
        Ok(())
    }

    /// Seed of trial `trial`; also seeds that trial's model fitting.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        derive_seed(self.seed, trial as u64)
    }

    /// Configuration of trial `trial`, independent of every other trial.
    pub fn sample(&self, trial: usize) -> NetworkConfig {
        let seed = self.trial_seed(trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = self.dists().map(|d| d.sample(&mut rng)).into_iter();
        let mut next = || draw.next().expect("ten parameters");
        let n_inputs = next() as usize;
        let layers = next() as usize;
        let width = next() as usize;
        NetworkConfig {
            n_inputs,
            hidden_layers: vec![width; layers],
            dropout_rate: next(),
            batch_norm: next() != 0.0,
            learning_rate: next(),
            l2_coefficient: next(),
            lr_decay: next(),
            momentum: next(),
            epochs: next() as usize,
            seed,
        }
    }
}
