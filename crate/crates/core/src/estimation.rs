//! Online estimation over a finite class: exponential-weights aggregation
//! under log loss, mixture prediction, and Hellinger-error bookkeeping.

use crate::error::{DecError, Result};
use crate::models::{Model, ModelClass};
use crate::probkit::{DivergenceKind, Sample};

/// Confidence level used by the default Option II radius.
pub const DEFAULT_CONFIDENCE_DELTA: f64 = 0.05;

/// Default confidence radius `log|class| + 2 log(1/delta)`.
pub fn default_radius(class_size: usize) -> f64 {
    (class_size as f64).ln() + 2.0 * (1.0 / DEFAULT_CONFIDENCE_DELTA).ln()
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleState {
    log_weights: Vec<f64>,
    cum_logloss: Vec<f64>,
    mixture_logloss: f64,
    est_h: f64,
    round: usize,
}

impl OracleState {
    /// Uniform prior over `n` models.
    pub fn new(n: usize) -> Self {
        Self::with_prior(&vec![1.0 / n as f64; n]).expect("uniform prior is valid")
    }

    pub fn with_prior(prior: &[f64]) -> Result<Self> {
        let s: f64 = prior.iter().sum();
        if prior.is_empty() || prior.iter().any(|&w| w < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(DecError::InvalidParams("prior must lie on the simplex".into()));
        }
        let n = prior.len();
        Ok(OracleState {
            log_weights: prior.iter().map(|w| w.ln()).collect(),
            cum_logloss: vec![0.0; n],
            mixture_logloss: 0.0,
            est_h: 0.0,
            round: 0,
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn cum_logloss(&self) -> &[f64] {
        &self.cum_logloss
    }

    /// Cumulative Hellinger estimation error recorded so far.
    pub fn est_h(&self) -> f64 {
        self.est_h
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Log-loss regret of the mixture prediction against the best single model.
    pub fn reg_kl(&self) -> f64 {
        let best = self.cum_logloss.iter().copied().fold(f64::INFINITY, f64::min);
        self.mixture_logloss - best
    }

    /// One exponential-weights step after observing `x` at decision `pi`.
    pub fn aggregate_update(&mut self, class: &ModelClass, pi: usize, x: &Sample) -> Result<()> {
        if class.len() != self.log_weights.len() {
            return Err(DecError::WeightDim { expected: class.len(), got: self.log_weights.len() });
        }
        if pi >= class.num_decisions() {
            return Err(DecError::IndexOutOfRange { index: pi, len: class.num_decisions() });
        }
        let ll: Vec<f64> = class.models().iter().map(|m| m.outcome(pi).log_likelihood(x)).collect();
        let joint: Vec<f64> = self.log_weights.iter().zip(&ll).map(|(w, l)| w + l).collect();
        let norm = log_sum_exp(joint.iter().copied());
        if norm == f64::NEG_INFINITY || norm.is_nan() {
            return Err(DecError::AllZeroLikelihood);
        }
        self.mixture_logloss -= norm;
        for (i, l) in ll.iter().enumerate() {
            self.cum_logloss[i] -= l;
            self.log_weights[i] = joint[i] - norm;
        }
        self.round += 1;
        Ok(())
    }

    /// Adds `E_{pi~p} D_H^2(truth(pi), estimate(pi))` to the error ledger and returns it.
    pub fn ledger_add(&mut self, p: &[f64], estimate: &Model, truth: &Model) -> Result<f64> {
        let inc = truth.expected_divergence(DivergenceKind::HellingerSq, estimate, p)?;
        self.est_h += inc;
        Ok(inc)
    }
}

/// Posterior mixture, optionally smoothed toward the uniform law on each support.
pub fn predict(state: &OracleState, class: &ModelClass, smoothing: f64) -> Result<Model> {
    class.mixture(&state.weights())?.smoothed(smoothing)
}

/// Posterior restricted to `active` and renormalized.
pub fn restricted_weights(state: &OracleState, active: &[usize]) -> Result<Vec<f64>> {
    if active.is_empty() {
        return Err(DecError::EmptyActiveSet);
    }
    let lw = state.log_weights();
    let norm = log_sum_exp(active.iter().map(|&i| lw[i]));
    if norm == f64::NEG_INFINITY {
        // Every active model has zero posterior mass: fall back to uniform.
        return Ok(vec![1.0 / active.len() as f64; active.len()]);
    }
    Ok(active.iter().map(|&i| (lw[i] - norm).exp()).collect())
}

pub fn predict_restricted(state: &OracleState, class: &ModelClass, active: &[usize]) -> Result<Model> {
    let w = restricted_weights(state, active)?;
    class.subclass(active)?.mixture(&w)
}

/// Models whose cumulative expected Hellinger error against past estimates is
/// at most `radius_sq`, intersected with `previous` when given.
pub fn confidence_set(
    history: &[(Vec<f64>, Model)],
    class: &ModelClass,
    radius_sq: f64,
    previous: Option<&[usize]>,
) -> Result<Vec<usize>> {
    let candidates: Vec<usize> = match previous {
        Some(prev) => prev.to_vec(),
        None => (0..class.len()).collect(),
    };
    let mut keep = Vec::with_capacity(candidates.len());
    for i in candidates {
        let m = class.model(i);
        let mut err = 0.0;
        for (p, est) in history {
            err += m.expected_divergence(DivergenceKind::HellingerSq, est, p)?;
        }
        if err <= radius_sq {
            keep.push(i);
        }
    }
    Ok(keep)
}

/// Incremental form of [`confidence_set`]: keeps per-model error sums.
#[derive(Debug, Clone)]
pub struct ConfidenceTracker {
    radius_sq: f64,
    errors: Vec<f64>,
    active: Vec<usize>,
}

impl ConfidenceTracker {
    pub fn new(class_size: usize, radius_sq: f64) -> Self {
        ConfidenceTracker { radius_sq, errors: vec![0.0; class_size], active: (0..class_size).collect() }
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn record(&mut self, class: &ModelClass, p: &[f64], estimate: &Model) -> Result<()> {
        for &i in &self.active {
            self.errors[i] += class.model(i).expected_divergence(DivergenceKind::HellingerSq, estimate, p)?;
        }
        let (r, errors) = (self.radius_sq, &self.errors);
        self.active.retain(|&i| errors[i] <= r);
        Ok(())
    }
}
