use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve};
use crate::scalar::Scalar;
use crate::survival::{risk_sets, RiskScores, RiskSets, SurvivalDataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged once the largest coefficient update is below this.
    pub tolerance: f64,
    /// Converged once the score vector norm is below this.
    pub gradient_tolerance: f64,
    /// Optional L2 penalty `ε/2 ‖β‖²` for near-singular problems.
    pub ridge: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-8,
            gradient_tolerance: 1e-8,
            ridge: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearCphFit<T> {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<T>,
    pub standard_errors: Vec<T>,
    pub hazard_ratios: Vec<T>,
    pub p_values: Vec<T>,
    /// Unpenalized log partial likelihood at the returned coefficients.
    pub log_likelihood: T,
    /// Norm of the (penalized) score vector at the returned coefficients.
    pub gradient_norm: T,
    pub iterations: usize,
    pub converged: bool,
    pub ridge: Option<T>,
    /// Objective value after each accepted step, starting at β = 0.
    pub objective_trace: Vec<T>,
}

struct Evaluation<T> {
    log_likelihood: T,
    score: Array1<T>,
    /// Observed information, `-∂²l/∂β²`.
    information: Array2<T>,
}

/// Log partial likelihood, score and information at `beta`. Risk-set sums
/// are accumulated in descending time with a running max shift so that
/// large linear predictors cannot overflow.
fn evaluate<T: Scalar>(x: ArrayView2<'_, T>, risk: &RiskSets<T>, beta: &Array1<T>) -> Evaluation<T> {
    let p = beta.len();
    let eta: Array1<T> = x.dot(beta);
    let order = risk.order();
    let groups = risk.groups();

    let mut shift = T::neg_infinity();
    let mut s0 = T::zero();
    let mut s1 = Array1::<T>::zeros(p);
    let mut s2 = Array2::<T>::zeros((p, p));
    let mut filled = 0;

    let mut log_likelihood = T::zero();
    let mut score = Array1::<T>::zeros(p);
    let mut information = Array2::<T>::zeros((p, p));

    for g in (0..groups.len()).rev() {
        let end = risk.at_risk_len(g);
        for &j in &order[filled..end] {
            if eta[j] > shift {
                let rescale = (shift - eta[j]).exp();
                s0 *= rescale;
                s1.mapv_inplace(|v| v * rescale);
                s2.mapv_inplace(|v| v * rescale);
                shift = eta[j];
            }
            let w = (eta[j] - shift).exp();
            let row = x.row(j);
            s0 += w;
            s1.scaled_add(w, &row);
            for a in 0..p {
                let wa = w * row[a];
                for b in 0..=a {
                    s2[[a, b]] += wa * row[b];
                }
            }
        }
        filled = end;

        let events = &groups[g].events;
        let d = T::of_usize(events.len());
        let log_den = shift + s0.ln();
        for &i in events {
            log_likelihood += eta[i] - log_den;
            score += &x.row(i);
        }
        let mean = s1.mapv(|v| v / s0);
        score.scaled_add(-d, &mean);
        for a in 0..p {
            for b in 0..=a {
                information[[a, b]] += d * (s2[[a, b]] / s0 - mean[a] * mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            information[[b, a]] = information[[a, b]];
        }
    }
    Evaluation {
        log_likelihood,
        score,
        information,
    }
}

struct Penalized<T> {
    base: Evaluation<T>,
    objective: T,
    score: Array1<T>,
    information: Array2<T>,
}

fn penalized<T: Scalar>(base: Evaluation<T>, beta: &Array1<T>, ridge: Option<T>) -> Penalized<T> {
    let (objective, score, information) = match ridge {
        None => (base.log_likelihood, base.score.clone(), base.information.clone()),
        Some(eps) => {
            let half = T::of(0.5);
            let mut info = base.information.clone();
            for a in 0..beta.len() {
                info[[a, a]] += eps;
            }
            (
                base.log_likelihood - half * eps * beta.dot(beta),
                &base.score - &beta.mapv(|b| b * eps),
                info,
            )
        }
    };
    Penalized {
        base,
        objective,
        score,
        information,
    }
}

fn norm<T: Scalar>(v: &Array1<T>) -> T {
    v.dot(v).sqrt()
}

/// Two-sided Wald p-value, `2 (1 - Φ(|z|))`.
fn wald_p_value<T: Scalar>(z: T) -> T {
    T::of(libm::erfc(z.abs().as_f64() / std::f64::consts::SQRT_2))
}

pub fn fit<T: Scalar>(dataset: &SurvivalDataset<T>, options: &FitOptions) -> Result<LinearCphFit<T>> {
    let risk = risk_sets(dataset)?;
    let x = dataset.features();
    let p = dataset.n_features();
    let ridge = match options.ridge {
        Some(eps) if !(eps.is_finite() && eps >= 0.0) => {
            return Err(Error::invalid(format!("ridge penalty must be non-negative, got {eps}")))
        }
        Some(eps) => Some(T::of(eps)),
        None => None,
    };
    let tolerance = T::of(options.tolerance);
    let gradient_tolerance = T::of(options.gradient_tolerance);
    let singular = |what: &str| {
        Error::SingularHessian(format!("{what}; {p} features, {} samples", dataset.n_samples()))
    };

    let mut beta = Array1::<T>::zeros(p);
    let mut current = penalized(evaluate(x, &risk, &beta), &beta, ridge);
    let mut trace = vec![current.objective];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        if norm(&current.score) < gradient_tolerance {
            converged = true;
            break;
        }
        let factor = cholesky(&current.information, T::of(1e-12))
            .ok_or_else(|| singular("information matrix is not positive definite"))?;
        let direction = cholesky_solve(&factor, &current.score);
        iterations += 1;

        // Near the optimum the predicted gain ½ gᵀH⁻¹g drops below the
        // resolution of the objective, and comparing values is just noise.
        let predicted_gain = T::of(0.5) * direction.dot(&current.score);
        let resolution = T::of(64.0) * T::epsilon() * (T::one() + current.objective.abs());
        let below_resolution = predicted_gain < resolution;

        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &beta + &direction.mapv(|d| d * step);
            let eval = penalized(evaluate(x, &risk, &candidate), &candidate, ridge);
            if eval.objective.is_finite() && (below_resolution || eval.objective >= current.objective) {
                accepted = Some((candidate, eval));
                break;
            }
            step = step * T::of(0.5);
        }
        let Some((next, eval)) = accepted else {
            // No ascent is numerically possible from here.
            converged = direction.iter().all(|d| d.abs() < tolerance.sqrt());
            break;
        };
        let largest_update = direction
            .iter()
            .fold(T::zero(), |m, d| m.max((*d * step).abs()));
        beta = next;
        current = eval;
        trace.push(current.objective);
        if largest_update < tolerance {
            converged = true;
            break;
        }
    }

    let factor = cholesky(&current.information, T::of(1e-12))
        .ok_or_else(|| singular("information matrix is singular at the optimum"))?;
    let covariance = cholesky_inverse(&factor);
    let coefficients = beta.to_vec();
    let standard_errors: Vec<T> = (0..p).map(|j| covariance[[j, j]].sqrt()).collect();
    let hazard_ratios = coefficients.iter().map(|b| b.exp()).collect();
    let p_values = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&b, &se)| wald_p_value(b / se))
        .collect();
    Ok(LinearCphFit {
        feature_names: dataset.feature_names().to_vec(),
        coefficients,
        standard_errors,
        hazard_ratios,
        p_values,
        log_likelihood: current.base.log_likelihood,
        gradient_norm: norm(&current.score),
        iterations,
        converged,
        ridge,
        objective_trace: trace,
    })
}

/// Linear log-risk `x·β` for each row.
pub fn predict_risk<T: Scalar>(fit: &LinearCphFit<T>, features: ArrayView2<'_, T>) -> Result<RiskScores<T>> {
    if features.ncols() != fit.coefficients.len() {
        return Err(Error::invalid(format!(
            "model has {} coefficients, features have {} columns",
            fit.coefficients.len(),
            features.ncols()
        )));
    }
    let beta = Array1::from(fit.coefficients.clone());
    RiskScores::new(features.dot(&beta).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{generate_synthetic, Baseline, SyntheticSpec, TrueRisk};
    use crate::survival::neg_log_partial_likelihood;
    use ndarray::array;

    fn linear_data(beta: Vec<f64>, n: usize, censoring: f64, seed: u64) -> SurvivalDataset<f64> {
        let spec = SyntheticSpec {
            n_samples: n,
            n_features: beta.len(),
            risk: TrueRisk::Linear(beta),
            baseline: Baseline::Exponential { rate: 0.1 },
            censoring_rate: censoring,
            seed,
        };
        generate_synthetic(&spec).unwrap().0
    }

    #[test]
    fn hand_solved_score_equation() {
        // Score: 1 - 2u/(2u+1) - u/(1+u) = 0 with u = e^β, so u = 1/√2.
        let ds = SurvivalDataset::new(
            array![[1.0], [0.0], [1.0]],
            vec!["x".into()],
            vec![1.0, 2.0, 3.0],
            vec![true, true, true],
        )
        .unwrap();
        let f = fit(&ds, &FitOptions::default()).unwrap();
        assert!(f.converged);
        assert!((f.coefficients[0] + 0.5 * 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn monotone_likelihood_diverges() {
        // The x = 1 sample fails first and alone, so l(β) increases without bound.
        let ds = SurvivalDataset::new(
            array![[1.0], [0.0]],
            vec!["x".into()],
            vec![1.0, 2.0],
            vec![true, true],
        )
        .unwrap();
        let f = fit(&ds, &FitOptions::default()).unwrap();
        assert!(f.coefficients[0] > 10.0, "{}", f.coefficients[0]);
        assert!(f.standard_errors[0] > 100.0);
    }

    #[test]
    fn recovers_linear_truth() {
        let ds = linear_data(vec![1.0, -0.5], 2000, 0.2, 42);
        let f = fit(&ds, &FitOptions::default()).unwrap();
        assert!(f.converged);
        assert!((f.coefficients[0] - 1.0).abs() < 0.1, "{:?}", f.coefficients);
        assert!((f.coefficients[1] + 0.5).abs() < 0.1, "{:?}", f.coefficients);
        assert!(f.gradient_norm < 1e-6, "{} after {} iterations, trace {:?}", f.gradient_norm, f.iterations, f.objective_trace);
        assert!(f.p_values.iter().all(|&p| p < 1e-6));
    }

    #[test]
    fn null_truth_gives_near_zero_coefficients() {
        let ds = linear_data(vec![0.0, 0.0], 2000, 0.2, 8);
        let f = fit(&ds, &FitOptions::default()).unwrap();
        for b in &f.coefficients {
            assert!(b.abs() < 0.08, "{b}");
        }
    }

    #[test]
    fn zero_column_is_singular() {
        let ds = linear_data(vec![1.0, -0.5], 200, 0.2, 1);
        let mut x = ds.features().to_owned();
        x.column_mut(1).fill(0.0);
        let ds = ds.with_features(x, ds.feature_names().to_vec()).unwrap();
        let err = fit(&ds, &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SingularHessian(_)), "{err}");
        assert!(err.to_string().contains("VIF"));
        let ridged = fit(&ds, &FitOptions { ridge: Some(1e-3), ..Default::default() }).unwrap();
        assert_eq!(ridged.coefficients[1], 0.0);
        assert!(ridged.ridge.is_some());
    }

    #[test]
    fn hazard_ratio_is_exp_of_coefficient() {
        let ds = linear_data(vec![0.7, -0.2, 0.1], 300, 0.3, 3);
        let f = fit(&ds, &FitOptions::default()).unwrap();
        for (b, hr) in f.coefficients.iter().zip(&f.hazard_ratios) {
            assert_eq!(b.exp(), *hr);
        }
        for (p, (b, se)) in f.p_values.iter().zip(f.coefficients.iter().zip(&f.standard_errors)) {
            let z: f64 = (b / se).abs();
            let phi = 0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2));
            assert!((p - 2.0 * (1.0 - phi)).abs() < 1e-12);
        }
    }

    #[test]
    fn accepted_steps_never_decrease_likelihood() {
        let ds = linear_data(vec![2.0, -1.5, 0.8], 500, 0.4, 5);
        let f = fit(&ds, &FitOptions::default()).unwrap();
        // Exact non-decrease, up to the rounding of the final sub-resolution step.
        let slack = 1e-12 * f.objective_trace[0].abs();
        assert!(f.objective_trace.windows(2).all(|w| w[1] >= w[0] - slack));
        assert!(f.iterations >= 3);
    }

    #[test]
    fn log_likelihood_agrees_with_partial_likelihood() {
        let ds = linear_data(vec![1.0, -0.5, 0.25], 800, 0.2, 6);
        let f = fit(&ds, &FitOptions::default()).unwrap();
        let scores = predict_risk(&f, ds.features()).unwrap();
        let nll = neg_log_partial_likelihood(&ds, &scores).unwrap();
        assert!((nll + f.log_likelihood).abs() < 1e-9, "{nll} vs {}", f.log_likelihood);
    }

    #[test]
    fn rescaling_a_column_rescales_its_coefficient() {
        let ds = linear_data(vec![0.6, -0.4], 600, 0.2, 7);
        let base = fit(&ds, &FitOptions::default()).unwrap();
        let c = 3.7;
        let mut x = ds.features().to_owned();
        x.column_mut(0).mapv_inplace(|v| v * c);
        let scaled = fit(&ds.with_features(x, ds.feature_names().to_vec()).unwrap(), &FitOptions::default()).unwrap();
        assert!((scaled.coefficients[0] - base.coefficients[0] / c).abs() < 1e-6);
        assert!((scaled.coefficients[1] - base.coefficients[1]).abs() < 1e-6);
        for (a, b) in scaled.p_values.iter().zip(&base.p_values) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((scaled.log_likelihood - base.log_likelihood).abs() < 1e-9);
    }

    #[test]
    fn predictions() {
        let ds = linear_data(vec![0.5], 50, 0.0, 2);
        let mut f = fit(&ds, &FitOptions::default()).unwrap();
        f.coefficients = vec![2f64.ln()];
        let s = predict_risk(&f, array![[0.0], [1.0]].view()).unwrap();
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 2f64.ln());
        assert!((s[1].exp() - 2.0).abs() < 1e-15);
        assert!(predict_risk(&f, array![[0.0, 1.0]].view()).is_err());
    }

    #[test]
    fn single_precision_fit() {
        let ds = linear_data(vec![1.0, -0.5], 1000, 0.2, 12).cast::<f32>();
        let f = fit(&ds, &FitOptions { tolerance: 1e-5, gradient_tolerance: 1e-3, ..Default::default() }).unwrap();
        assert!((f.coefficients[0] - 1.0).abs() < 0.15);
    }
}
