use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::survival::SurvivalDataset;

use super::fit::{fit, FitOptions, LinearCphFit};

/// Two-sided significance level for keeping a covariate (95% confidence).
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    pub feature: String,
    pub p_value: f64,
}

/// Refits repeatedly, each time dropping the single covariate with the
/// largest Wald p-value above `alpha`, until every retained covariate is
/// significant.
pub fn backward_eliminate<T: Scalar>(
    dataset: &SurvivalDataset<T>,
    alpha: f64,
    options: &FitOptions,
) -> Result<(LinearCphFit<T>, Vec<Removal>)> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let mut current = fit(dataset, options)?;
    if !current.converged {
        return Err(Error::invalid(
            "initial fit did not converge; backward elimination needs a converged start",
        ));
    }
    let mut trace = Vec::new();
    let mut kept: Vec<usize> = (0..dataset.n_features()).collect();
    loop {
        let worst = current
            .p_values
            .iter()
            .enumerate()
            .map(|(j, p)| (j, p.as_f64()))
            .fold(None, |best: Option<(usize, f64)>, (j, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((j, p)),
            });
        let Some((j, p)) = worst.filter(|&(_, p)| p > alpha) else {
            return Ok((current, trace));
        };
        trace.push(Removal {
            feature: current.feature_names[j].clone(),
            p_value: p,
        });
        kept.remove(j);
        if kept.is_empty() {
            return Err(Error::NullModel);
        }
        current = fit(&dataset.select_columns(&kept), options)?;
    }
}
