use crate::error::{Error, Result};
use crate::kv::{KvFile, KvWriter};

/// Architecture and optimizer settings of a risk network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Input width (the number of top-ranked features fed to the network).
    pub n_inputs: usize,
    pub hidden_layers: Vec<usize>,
    pub dropout_rate: f64,
    pub batch_norm: bool,
    pub l2_coefficient: f64,
    pub learning_rate: f64,
    /// `lr_t = lr_0 * exp(-lr_decay * epoch)`.
    pub lr_decay: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_inputs: 1,
            hidden_layers: vec![32],
            dropout_rate: 0.1,
            batch_norm: false,
            l2_coefficient: 0.0,
            learning_rate: 1e-3,
            lr_decay: 0.0,
            momentum: 0.9,
            epochs: 500,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::invalid(format!("network config: {msg}")));
        if self.n_inputs == 0 {
            return fail("n_inputs must be at least 1".into());
        }
        if self.hidden_layers.is_empty() {
            return fail("at least one hidden layer is required".into());
        }
        if let Some(w) = self.hidden_layers.iter().position(|&w| w == 0) {
            return fail(format!("hidden layer {w} has zero width"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate {} not in [0, 1)", self.dropout_rate));
        }
        if !(self.l2_coefficient >= 0.0 && self.l2_coefficient.is_finite()) {
            return fail(format!("l2_coefficient {} must be >= 0", self.l2_coefficient));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate {} must be > 0", self.learning_rate));
        }
        if !(self.lr_decay >= 0.0 && self.lr_decay.is_finite()) {
            return fail(format!("lr_decay {} must be >= 0", self.lr_decay));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum {} not in [0, 1)", self.momentum));
        }
        Ok(())
    }

    /// Widths of every layer from input to the single output node.
    pub fn layer_widths(&self) -> Vec<usize> {
        let mut widths = vec![self.n_inputs];
        widths.extend(&self.hidden_layers);
        widths.push(1);
        widths
    }

    /// Number of weights and biases (normalization parameters excluded).
    pub fn parameter_count(&self) -> usize {
        self.layer_widths()
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    pub(crate) fn write_kv(&self, w: &mut KvWriter) {
        w.put("n_inputs", self.n_inputs)
            .put_list("hidden_layers", &self.hidden_layers)
            .put("dropout_rate", self.dropout_rate)
            .put("batch_norm", self.batch_norm)
            .put("l2_coefficient", self.l2_coefficient)
            .put("learning_rate", self.learning_rate)
            .put("lr_decay", self.lr_decay)
            .put("momentum", self.momentum)
            .put("epochs", self.epochs)
            .put("seed", self.seed);
    }

    /// Reads the keys written by `write_kv`; missing keys keep their defaults.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let d = Self::default();
        let config = Self {
            n_inputs: kv.parse_or("n_inputs", d.n_inputs)?,
            hidden_layers: match kv.get("hidden_layers") {
                Some(e) => kv.parse_list(e)?,
                None => d.hidden_layers,
            },
            dropout_rate: kv.parse_or("dropout_rate", d.dropout_rate)?,
            batch_norm: kv.parse_or("batch_norm", d.batch_norm)?,
            l2_coefficient: kv.parse_or("l2_coefficient", d.l2_coefficient)?,
            learning_rate: kv.parse_or("learning_rate", d.learning_rate)?,
            lr_decay: kv.parse_or("lr_decay", d.lr_decay)?,
            momentum: kv.parse_or("momentum", d.momentum)?,
            epochs: kv.parse_or("epochs", d.epochs)?,
            seed: kv.parse_or("seed", d.seed)?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winning_architecture_parameter_count() {
        let config = NetworkConfig {
            n_inputs: 17,
            hidden_layers: vec![75, 75, 75],
            ..Default::default()
        };
        // 17*75+75 + 2*(75*75+75) + 75+1
        assert_eq!(config.parameter_count(), 17 * 75 + 75 + 2 * (75 * 75 + 75) + 75 + 1);
        assert_eq!(config.parameter_count(), 12_826);
        assert_eq!(config.layer_widths(), vec![17, 75, 75, 75, 1]);
    }

    #[test]
    fn rejects_out_of_range_settings() {
        let ok = NetworkConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            NetworkConfig { hidden_layers: vec![], ..ok.clone() },
            NetworkConfig { hidden_layers: vec![4, 0], ..ok.clone() },
            NetworkConfig { n_inputs: 0, ..ok.clone() },
            NetworkConfig { dropout_rate: 1.0, ..ok.clone() },
            NetworkConfig { dropout_rate: -0.1, ..ok.clone() },
            NetworkConfig { l2_coefficient: -1.0, ..ok.clone() },
            NetworkConfig { learning_rate: 0.0, ..ok.clone() },
            NetworkConfig { lr_decay: f64::NAN, ..ok.clone() },
            NetworkConfig { momentum: 1.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn text_round_trip() {
        let config = NetworkConfig {
            n_inputs: 5,
            hidden_layers: vec![8, 3],
            dropout_rate: 0.25,
            batch_norm: true,
            l2_coefficient: 1.5e-4,
            learning_rate: 0.0123,
            lr_decay: 1e-3,
            momentum: 0.85,
            epochs: 42,
            seed: 99,
        };
        let mut w = KvWriter::new();
        config.write_kv(&mut w);
        let kv = KvFile::parse("net", &w.finish()).unwrap();
        assert_eq!(NetworkConfig::from_kv(&kv).unwrap(), config);
    }
}
