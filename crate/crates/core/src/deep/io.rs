use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::kv::{Entry, KvFile, KvWriter};
use crate::scalar::Scalar;

use super::config::NetworkConfig;
use super::network::{BatchNorm, Dense, HiddenLayer, RiskNetwork};

const FORMAT: &str = "coxnet-network 1";

fn scalar_name<T: Scalar>() -> &'static str {
    std::any::type_name::<T>()
}

impl<T: Scalar> RiskNetwork<T> {
    /// Text form holding the config and every parameter. Numbers use the
    /// shortest round-trip representation, so loading reproduces the
    /// network bit for bit.
    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.put("format", FORMAT).put("scalar", scalar_name::<T>());
        self.config().write_kv(&mut w);
        for (l, layer) in self.hidden.iter().enumerate() {
            put_dense(&mut w, &format!("hidden.{l}"), &layer.dense);
            if let Some(bn) = &layer.norm {
                w.put_list(&format!("hidden.{l}.gamma"), bn.gamma.as_slice().expect("contiguous"))
                    .put_list(&format!("hidden.{l}.beta"), bn.beta.as_slice().expect("contiguous"))
                    .put_list(
                        &format!("hidden.{l}.running_mean"),
                        bn.running_mean.as_slice().expect("contiguous"),
                    )
                    .put_list(
                        &format!("hidden.{l}.running_var"),
                        bn.running_var.as_slice().expect("contiguous"),
                    );
            }
        }
        put_dense(&mut w, "output", &self.output);
        w.finish()
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let format = kv.require("format")?;
        if format.value != FORMAT {
            return Err(kv.error(format, "unsupported network format"));
        }
        let scalar = kv.require("scalar")?;
        if scalar.value != scalar_name::<T>() {
            return Err(kv.error(
                scalar,
                format!("network stored as {}, loading as {}", scalar.value, scalar_name::<T>()),
            ));
        }
        let config = NetworkConfig::from_kv(kv)?;
        let widths = config.layer_widths();
        let mut hidden = Vec::new();
        for l in 0..config.hidden_layers.len() {
            let prefix = format!("hidden.{l}");
            let dense = read_dense(kv, &prefix, widths[l], widths[l + 1])?;
            let norm = if config.batch_norm {
                let vec = |name: &str| read_vector::<T>(kv, &format!("{prefix}.{name}"), widths[l + 1]);
                Some(BatchNorm {
                    gamma: vec("gamma")?,
                    beta: vec("beta")?,
                    running_mean: vec("running_mean")?,
                    running_var: vec("running_var")?,
                })
            } else {
                None
            };
            hidden.push(HiddenLayer { dense, norm });
        }
        let last = widths[widths.len() - 2];
        let output = read_dense(kv, "output", last, 1)?;
        RiskNetwork::from_parts(config, hidden, output)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }
}

fn put_dense<T: Scalar>(w: &mut KvWriter, prefix: &str, dense: &Dense<T>) {
    let weights: Vec<T> = dense.weights.iter().copied().collect();
    w.put_list(&format!("{prefix}.weights"), &weights)
        .put_list(&format!("{prefix}.bias"), dense.bias.as_slice().expect("contiguous"));
}

fn parse_values<T: Scalar>(kv: &KvFile, entry: &Entry, len: usize) -> Result<Vec<T>> {
    let values: Vec<T> = crate::kv::split_list(&entry.value)
        .map(|s| T::parse_scalar(s).ok_or_else(|| kv.error(entry, format!("bad number '{s}'"))))
        .collect::<Result<_>>()?;
    if values.len() != len {
        return Err(kv.error(entry, format!("expected {len} values, found {}", values.len())));
    }
    Ok(values)
}

fn read_vector<T: Scalar>(kv: &KvFile, key: &str, len: usize) -> Result<Array1<T>> {
    Ok(Array1::from(parse_values(kv, kv.require(key)?, len)?))
}

fn read_dense<T: Scalar>(kv: &KvFile, prefix: &str, fan_in: usize, fan_out: usize) -> Result<Dense<T>> {
    let weights = parse_values(kv, kv.require(&format!("{prefix}.weights"))?, fan_in * fan_out)?;
    Ok(Dense {
        weights: Array2::from_shape_vec((fan_in, fan_out), weights).expect("length checked"),
        bias: read_vector(kv, &format!("{prefix}.bias"), fan_out)?,
    })
}
