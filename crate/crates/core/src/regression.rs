//! Per-point distribution parameters from feature vectors.
//!
//! Each data point carries a feature vector `f` whose first entry is the
//! constant 1. Its two distribution parameters are
//!
//! ```text
//! theta = sigma(W f),   sigma_k(a) = U_k / (1 + exp(-a_k))
//! ```
//!
//! with a `2 x n` weight matrix `W` and upper bounds `U`. `W` is fitted by
//! gradient ascent on the censored log-likelihood
//!
//! ```text
//! ll(W) = sum_i ln f(t_i | theta_i) + sum_j ln S(x_j | theta_j)
//! grad  = sum_i (score_i ∘ sigma'(a_i)) f_iᵀ,   sigma'(a) = theta (1 - theta / U)
//! ```
//!
//! starting from the featureless fit so that the first iterate reproduces it.

use crate::distributions::{DistributionParams, Family};
use crate::error::{Error, Result};
use crate::estimation::{fit as fit_global, CensoredSampleSet};
use crate::threshold::{optimal_threshold, ThresholdReport};

/// Feature vector with the leading bias entry fixed to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.first() != Some(&1.0) {
            return Err(Error::InvalidSamples(
                "feature vectors must start with the bias entry 1".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples("feature values must be finite".into()));
        }
        Ok(Self(values))
    }

    /// Prepends the bias entry to raw feature values.
    pub fn with_bias(features: &[f64]) -> Result<Self> {
        let mut v = Vec::with_capacity(features.len() + 1);
        v.push(1.0);
        v.extend_from_slice(features);
        Self::new(v)
    }

    pub fn bias_only() -> Self {
        Self(vec![1.0])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Features without the bias entry.
    pub fn features(&self) -> &[f64] {
        &self.0[1..]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn sigmoid_link(alpha: [f64; 2], upper: [f64; 2]) -> [f64; 2] {
    [
        upper[0] / (1.0 + (-alpha[0]).exp()),
        upper[1] / (1.0 + (-alpha[1]).exp()),
    ]
}

/// Derivative of [`sigmoid_link`] with respect to `alpha`, componentwise.
pub fn sigmoid_link_derivative(alpha: [f64; 2], upper: [f64; 2]) -> [f64; 2] {
    let theta = sigmoid_link(alpha, upper);
    [
        theta[0] * (1.0 - theta[0] / upper[0]),
        theta[1] * (1.0 - theta[1] / upper[1]),
    ]
}

fn inverse_sigmoid(theta: f64, upper: f64) -> f64 {
    (theta / (upper - theta)).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    family: Family,
    weights: [Vec<f64>; 2],
    upper_bounds: [f64; 2],
}

impl RegressionModel {
    pub fn new(family: Family, weights: [Vec<f64>; 2], upper_bounds: [f64; 2]) -> Result<Self> {
        if family.n_params() != 2 {
            return Err(Error::UnsupportedFamily(family.name()));
        }
        if weights[0].len() != weights[1].len() || weights[0].is_empty() {
            return Err(Error::DimensionMismatch {
                expected: weights[0].len().max(1),
                got: weights[1].len(),
            });
        }
        for (k, &u) in upper_bounds.iter().enumerate() {
            if !(u.is_finite() && u > 0.0) {
                return Err(Error::InvalidParameter {
                    name: if k == 0 { "upper_bound_1" } else { "upper_bound_2" },
                    value: u,
                    reason: "upper bounds must be finite and positive",
                });
            }
        }
        Ok(Self {
            family,
            weights,
            upper_bounds,
        })
    }

    /// Model whose every prediction is `theta` (bias column only).
    pub fn constant(family: Family, theta: [f64; 2], upper_bounds: [f64; 2], dim: usize) -> Result<Self> {
        let mut w = [vec![0.0; dim], vec![0.0; dim]];
        for k in 0..2 {
            w[k][0] = inverse_sigmoid(theta[k], upper_bounds[k]);
        }
        Self::new(family, w, upper_bounds)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn weights(&self) -> &[Vec<f64>; 2] {
        &self.weights
    }

    pub fn upper_bounds(&self) -> [f64; 2] {
        self.upper_bounds
    }

    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    fn alpha(&self, f: &FeatureVector) -> Result<[f64; 2]> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.len(),
            });
        }
        let dot = |w: &[f64]| w.iter().zip(f.values()).map(|(a, b)| a * b).sum::<f64>();
        Ok([dot(&self.weights[0]), dot(&self.weights[1])])
    }

    pub fn predict_theta(&self, f: &FeatureVector) -> Result<[f64; 2]> {
        Ok(sigmoid_link(self.alpha(f)?, self.upper_bounds))
    }

    /// Parameters for one point, in `(shape, scale)` order.
    pub fn predict_params(&self, f: &FeatureVector) -> Result<DistributionParams> {
        let theta = self.predict_theta(f)?;
        DistributionParams::from_pair(self.family, theta[0], theta[1])
    }
}

#[derive(Debug, Clone, Default)]
pub struct RegressionDataset {
    observed: Vec<(f64, FeatureVector)>,
    censored: Vec<(f64, FeatureVector)>,
}

impl RegressionDataset {
    pub fn new(observed: Vec<(f64, FeatureVector)>, censored: Vec<(f64, FeatureVector)>) -> Result<Self> {
        let dim = observed
            .first()
            .or(censored.first())
            .map(|(_, f)| f.len())
            .unwrap_or(1);
        for (t, f) in observed.iter().chain(&censored) {
            if !(t.is_finite() && *t > 0.0) {
                return Err(Error::InvalidSamples(format!(
                    "durations must be finite and positive, got {t}"
                )));
            }
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: f.len(),
                });
            }
        }
        Ok(Self { observed, censored })
    }

    pub fn observed(&self) -> &[(f64, FeatureVector)] {
        &self.observed
    }

    pub fn censored(&self) -> &[(f64, FeatureVector)] {
        &self.censored
    }

    pub fn dim(&self) -> usize {
        self.observed
            .first()
            .or(self.censored.first())
            .map(|(_, f)| f.len())
            .unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.observed.len() + self.censored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The same durations with features dropped.
    pub fn featureless(&self) -> Result<CensoredSampleSet> {
        let levels: Vec<f64> = self.censored.iter().map(|(x, _)| *x).collect();
        CensoredSampleSet::from_durations(self.observed.iter().map(|(t, _)| *t).collect(), &levels)
    }

    fn points(&self) -> impl Iterator<Item = (f64, &FeatureVector, bool)> {
        self.observed
            .iter()
            .map(|(t, f)| (*t, f, false))
            .chain(self.censored.iter().map(|(x, f)| (*x, f, true)))
    }
}

pub fn regression_log_likelihood(m: &RegressionModel, d: &RegressionDataset) -> Result<f64> {
    let mut ll = 0.0;
    for (t, f, censored) in d.points() {
        let params = match m.predict_params(f) {
            Ok(p) => p,
            // a saturated link (theta == 0) has no valid distribution
            Err(Error::InvalidParameter { .. }) => return Ok(f64::NEG_INFINITY),
            Err(e) => return Err(e),
        };
        ll += if censored {
            params.ln_survival_unchecked(t)
        } else {
            params.ln_pdf_unchecked(t)
        };
    }
    Ok(if ll.is_nan() { f64::NEG_INFINITY } else { ll })
}

pub fn regression_gradient(m: &RegressionModel, d: &RegressionDataset) -> Result<[Vec<f64>; 2]> {
    let n = m.dim();
    let mut grad = [vec![0.0; n], vec![0.0; n]];
    for (t, f, censored) in d.points() {
        let alpha = m.alpha(f)?;
        let theta = sigmoid_link(alpha, m.upper_bounds);
        let slope = sigmoid_link_derivative(alpha, m.upper_bounds);
        let params = DistributionParams::from_pair(m.family, theta[0], theta[1])?;
        let score = if censored {
            params.score_ln_survival(t)
        } else {
            params.score_ln_pdf(t)
        };
        for k in 0..2 {
            let c = score[k] * slope[k];
            for (g, x) in grad[k].iter_mut().zip(f.values()) {
                *g += c * x;
            }
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub model: RegressionModel,
    pub global: DistributionParams,
    pub initial_log_likelihood: f64,
    pub log_likelihood: f64,
    /// Log-likelihood after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub const MAX_ITERATIONS: usize = 10_000;
const GRADIENT_TOL: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;

/// Column-wise standardization of non-bias features.
#[derive(Debug, Clone)]
struct Standardizer {
    mean: Vec<f64>,
    // 0 marks a constant column, which is zeroed out
    inv_sd: Vec<f64>,
}

impl Standardizer {
    fn fit(d: &RegressionDataset) -> Self {
        let n = d.dim();
        let count = d.len() as f64;
        let mut mean = vec![0.0; n];
        for (_, f, _) in d.points() {
            for (m, x) in mean.iter_mut().zip(f.values()) {
                *m += x / count;
            }
        }
        let mut var = vec![0.0; n];
        for (_, f, _) in d.points() {
            for j in 1..n {
                var[j] += (f.values()[j] - mean[j]).powi(2) / count;
            }
        }
        let mut inv_sd = vec![0.0; n];
        mean[0] = 0.0;
        inv_sd[0] = 1.0;
        for j in 1..n {
            let sd = var[j].sqrt();
            if sd > 1e-12 * mean[j].abs().max(1.0) {
                inv_sd[j] = 1.0 / sd;
            } else {
                mean[j] = 0.0;
            }
        }
        Self { mean, inv_sd }
    }

    fn apply(&self, f: &FeatureVector) -> FeatureVector {
        FeatureVector(
            f.values()
                .iter()
                .enumerate()
                .map(|(j, &x)| if j == 0 { 1.0 } else { (x - self.mean[j]) * self.inv_sd[j] })
                .collect(),
        )
    }

    /// Maps weights on standardized features back to raw features.
    fn unscale(&self, w: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
        let mut out = [vec![0.0; w[0].len()], vec![0.0; w[0].len()]];
        for k in 0..2 {
            let mut bias = w[k][0];
            for j in 1..w[k].len() {
                out[k][j] = w[k][j] * self.inv_sd[j];
                bias -= w[k][j] * self.inv_sd[j] * self.mean[j];
            }
            out[k][0] = bias;
        }
        out
    }
}

/// Fits `W` by gradient ascent with backtracking (Armijo factor 0.5,
/// initial step 1) on the per-point mean log-likelihood.
///
/// `upper_bounds` default to ten times the featureless estimates.
pub fn fit_regression(
    family: Family,
    data: &RegressionDataset,
    upper_bounds: Option<[f64; 2]>,
) -> Result<RegressionFit> {
    if family.n_params() != 2 {
        return Err(Error::UnsupportedFamily(family.name()));
    }
    if data.observed.is_empty() {
        return Err(Error::InvalidSamples(
            "at least one fully observed duration is required".into(),
        ));
    }
    let global = fit_global(family, &data.featureless()?)?.params;
    let (a, b) = global.pair();
    let upper = upper_bounds.unwrap_or([10.0 * a, 10.0 * b]);
    if a >= upper[0] || b >= upper[1] {
        return Err(Error::InvalidParameter {
            name: "upper_bounds",
            value: upper[0].min(upper[1]),
            reason: "upper bounds must exceed the featureless fit",
        });
    }

    let scaler = Standardizer::fit(data);
    let scaled = RegressionDataset {
        observed: data.observed.iter().map(|(t, f)| (*t, scaler.apply(f))).collect(),
        censored: data.censored.iter().map(|(x, f)| (*x, scaler.apply(f))).collect(),
    };
    let weight = scaled.len() as f64;
    let dim = data.dim();

    let mut model = RegressionModel::constant(family, [a, b], upper, dim)?;
    let mut ll = regression_log_likelihood(&model, &scaled)? / weight;
    let initial = ll;
    let mut trace = vec![ll * weight];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        let mut grad = regression_gradient(&model, &scaled)?;
        for g in grad.iter_mut().flatten() {
            *g /= weight;
        }
        let max_abs = grad.iter().flatten().fold(0.0f64, |m, g| m.max(g.abs()));
        if max_abs < GRADIENT_TOL {
            converged = true;
            break;
        }
        let sq_norm: f64 = grad.iter().flatten().map(|g| g * g).sum();

        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-20 {
            let mut w = model.weights.clone();
            for k in 0..2 {
                for (wj, gj) in w[k].iter_mut().zip(&grad[k]) {
                    *wj += step * gj;
                }
            }
            let trial = RegressionModel { weights: w, ..model.clone() };
            let trial_ll = regression_log_likelihood(&trial, &scaled)? / weight;
            if trial_ll >= ll + ARMIJO * step * sq_norm {
                accepted = Some((trial, trial_ll));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((trial, trial_ll)) => {
                model = trial;
                ll = trial_ll;
                trace.push(ll * weight);
            }
            // no ascent direction left at working precision
            None => break,
        }
    }

    let model = RegressionModel::new(family, scaler.unscale(&model.weights), upper)?;
    Ok(RegressionFit {
        log_likelihood: regression_log_likelihood(&model, data)?,
        model,
        global,
        initial_log_likelihood: initial * weight,
        trace,
        iterations,
        converged,
    })
}

/// Optimal waiting threshold for one point's predicted distribution.
pub fn per_point_threshold(m: &RegressionModel, f: &FeatureVector, c_int: f64) -> Result<ThresholdReport> {
    optimal_threshold(&m.predict_params(f)?, c_int)
}
