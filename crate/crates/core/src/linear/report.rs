use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kv::{KvFile, KvWriter};
use crate::scalar::Scalar;

use super::fit::LinearCphFit;

const FORMAT: &str = "coxnet-linear 1";

fn format_p(p: f64) -> String {
    if p < 0.005 {
        "<0.005".to_string()
    } else {
        format!("{p:.3}")
    }
}

impl<T: Scalar> LinearCphFit<T> {
    /// Variable / coefficient / hazard ratio / p-value table.
    pub fn report_table(&self) -> String {
        let width = self
            .feature_names
            .iter()
            .map(|n| n.len())
            .max()
            .unwrap_or(0)
            .max("Variable".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>11}  {:>12}  {:>8}",
            "Variable", "Coefficient", "Hazard Ratio", "p-value"
        );
        let _ = writeln!(out, "{}", "-".repeat(width + 39));
        for j in 0..self.coefficients.len() {
            let _ = writeln!(
                out,
                "{:<width$}  {:>11.2}  {:>12.2}  {:>8}",
                self.feature_names[j],
                self.coefficients[j].as_f64(),
                self.hazard_ratios[j].as_f64(),
                format_p(self.p_values[j].as_f64())
            );
        }
        let _ = writeln!(
            out,
            "log partial likelihood {:.4}; {} iterations; {}",
            self.log_likelihood.as_f64(),
            self.iterations,
            if self.converged { "converged" } else { "NOT converged" }
        );
        if let Some(eps) = self.ridge {
            let _ = writeln!(out, "ridge penalty {eps} applied");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.put("format", FORMAT)
            .put("log_likelihood", self.log_likelihood)
            .put("gradient_norm", self.gradient_norm)
            .put("iterations", self.iterations)
            .put("converged", self.converged)
            .put(
                "ridge",
                self.ridge.map_or_else(|| "none".to_string(), |r| r.to_string()),
            );
        w.comment("feature = name | coefficient | std error | hazard ratio | p-value");
        for j in 0..self.coefficients.len() {
            w.put(
                "feature",
                format!(
                    "{} | {} | {} | {} | {}",
                    self.feature_names[j],
                    self.coefficients[j],
                    self.standard_errors[j],
                    self.hazard_ratios[j],
                    self.p_values[j]
                ),
            );
        }
        w.finish()
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let format = kv.require("format")?;
        if format.value != FORMAT {
            return Err(kv.error(format, "unsupported linear model format"));
        }
        let parse = |entry: &crate::kv::Entry, s: &str| {
            T::parse_scalar(s).ok_or_else(|| kv.error(entry, format!("bad number '{s}'")))
        };
        let mut fit = LinearCphFit {
            feature_names: vec![],
            coefficients: vec![],
            standard_errors: vec![],
            hazard_ratios: vec![],
            p_values: vec![],
            log_likelihood: {
                let e = kv.require("log_likelihood")?;
                parse(e, &e.value)?
            },
            gradient_norm: {
                let e = kv.require("gradient_norm")?;
                parse(e, &e.value)?
            },
            iterations: kv.parse_required("iterations")?,
            converged: kv.parse_required("converged")?,
            ridge: {
                let e = kv.require("ridge")?;
                if e.value == "none" {
                    None
                } else {
                    Some(parse(e, &e.value)?)
                }
            },
            objective_trace: vec![],
        };
        for entry in kv.entries().iter().filter(|e| e.key == "feature") {
            let parts: Vec<&str> = entry.value.split('|').map(str::trim).collect();
            if parts.len() != 5 {
                return Err(kv.error(entry, "expected 5 '|'-separated fields"));
            }
            fit.feature_names.push(parts[0].to_string());
            fit.coefficients.push(parse(entry, parts[1])?);
            fit.standard_errors.push(parse(entry, parts[2])?);
            fit.hazard_ratios.push(parse(entry, parts[3])?);
            fit.p_values.push(parse(entry, parts[4])?);
        }
        if fit.feature_names.is_empty() {
            return Err(Error::invalid(format!("{}: model has no features", kv.name())));
        }
        Ok(fit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LinearCphFit<f64> {
        LinearCphFit {
            feature_names: vec!["Lane Width".into(), "Gender: Female".into()],
            coefficients: vec![-0.59, -0.11],
            standard_errors: vec![0.05, 0.047],
            hazard_ratios: vec![(-0.59f64).exp(), (-0.11f64).exp()],
            p_values: vec![1e-30, 0.0193],
            log_likelihood: -1234.5678,
            gradient_norm: 1e-11,
            iterations: 5,
            converged: true,
            ridge: None,
            objective_trace: vec![],
        }
    }

    #[test]
    fn table_layout() {
        let text = sample().report_table();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].contains("Coefficient") && lines[0].contains("Hazard Ratio"));
        assert!(lines[2].starts_with("Lane Width"));
        assert!(lines[2].contains("-0.59") && lines[2].contains("0.55") && lines[2].contains("<0.005"));
        assert!(lines[3].contains("0.019"));
    }

    #[test]
    fn text_round_trip() {
        let fit = sample();
        let back = LinearCphFit::<f64>::from_kv(&KvFile::parse("m", &fit.to_text()).unwrap()).unwrap();
        assert_eq!(back, fit);
    }
}
