//! Models, finite model classes, localization and mixtures.

use serde::{Deserialize, Serialize};

use crate::error::{DecError, Result};
use crate::probkit::{divergence, DivergenceKind, Outcome, OutcomeDist};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    outcomes: Vec<OutcomeDist>,
}

/// A map from decisions to outcome distributions, with cached mean rewards
/// and optimal decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct Model {
    outcomes: Vec<OutcomeDist>,
    fvec: Vec<f64>,
    opt: (usize, f64),
}

impl TryFrom<RawModel> for Model {
    type Error = DecError;
    fn try_from(raw: RawModel) -> Result<Self> {
        Model::new(raw.outcomes)
    }
}

impl From<Model> for RawModel {
    fn from(m: Model) -> Self {
        RawModel { outcomes: m.outcomes }
    }
}

/// Least index attaining the maximum.
pub fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

impl Model {
    pub fn new(outcomes: Vec<OutcomeDist>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(DecError::InvalidParams("a model needs at least one decision".into()));
        }
        for o in &outcomes {
            o.validate()?;
        }
        let fvec: Vec<f64> = outcomes.iter().map(OutcomeDist::mean).collect();
        let opt = argmax(&fvec);
        Ok(Model { outcomes, fvec, opt })
    }

    pub fn bernoulli(means: &[f64]) -> Result<Self> {
        Model::new(means.iter().map(|&m| OutcomeDist::bernoulli(m)).collect::<Result<_>>()?)
    }

    pub fn num_decisions(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome(&self, pi: usize) -> &OutcomeDist {
        &self.outcomes[pi]
    }

    pub fn outcomes(&self) -> &[OutcomeDist] {
        &self.outcomes
    }

    pub fn means(&self) -> &[f64] {
        &self.fvec
    }

    pub fn value(&self, pi: usize) -> f64 {
        self.fvec[pi]
    }

    /// Optimal decision (least index on ties) and its value.
    pub fn best_decision(&self) -> (usize, f64) {
        self.opt
    }

    pub fn gap(&self, pi: usize) -> f64 {
        self.opt.1 - self.fvec[pi]
    }

    pub fn divergence_at(&self, kind: DivergenceKind, other: &Model, pi: usize) -> Result<f64> {
        divergence(kind, &self.outcomes[pi], &other.outcomes[pi])
    }

    pub fn expected_divergence(&self, kind: DivergenceKind, other: &Model, p: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (pi, &w) in p.iter().enumerate() {
            if w > 0.0 {
                total += w * self.divergence_at(kind, other, pi)?;
            }
        }
        Ok(total)
    }

    /// Mixes every decision's law with the uniform law over its support.
    pub fn smoothed(&self, alpha: f64) -> Result<Model> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(DecError::InvalidParams(format!("smoothing {alpha} outside [0,1)")));
        }
        if alpha == 0.0 {
            return Ok(self.clone());
        }
        Model::new(self.outcomes.iter().map(|o| smooth(o, alpha)).collect::<Result<_>>()?)
    }
}

fn smooth(o: &OutcomeDist, alpha: f64) -> Result<OutcomeDist> {
    Ok(match o {
        OutcomeDist::Bernoulli(mu) => OutcomeDist::Bernoulli((1.0 - alpha) * mu + alpha / 2.0),
        OutcomeDist::Rademacher(mu) => OutcomeDist::Rademacher((1.0 - alpha) * mu),
        OutcomeDist::Categorical { support, probs } => {
            let n = probs.len() as f64;
            let probs = probs.iter().map(|p| (1.0 - alpha) * p + alpha / n).collect();
            OutcomeDist::Categorical { support: support.clone(), probs }
        }
        OutcomeDist::PointMass(r) => OutcomeDist::PointMass(*r),
        OutcomeDist::Gaussian { .. } => return Err(DecError::MixtureUnsupported("gaussian")),
    })
}

/// Weighted mixture of outcome laws at one decision.
pub fn mix_outcomes(parts: &[&OutcomeDist], weights: &[f64]) -> Result<OutcomeDist> {
    if parts.len() != weights.len() {
        return Err(DecError::WeightDim { expected: parts.len(), got: weights.len() });
    }
    if parts.iter().any(|p| matches!(p, OutcomeDist::Gaussian { .. })) {
        return Err(DecError::MixtureUnsupported("gaussian"));
    }
    let weighted_mean = || parts.iter().zip(weights).map(|(p, w)| w * p.mean()).sum::<f64>();
    if parts.iter().all(|p| matches!(p, OutcomeDist::Bernoulli(_))) {
        return Ok(OutcomeDist::Bernoulli(weighted_mean().clamp(0.0, 1.0)));
    }
    if parts.iter().all(|p| matches!(p, OutcomeDist::Rademacher(_))) {
        return Ok(OutcomeDist::Rademacher(weighted_mean().clamp(-1.0, 1.0)));
    }
    if let OutcomeDist::PointMass(r0) = parts[0] {
        if parts.iter().all(|p| matches!(p, OutcomeDist::PointMass(r) if r == r0)) {
            return Ok(OutcomeDist::PointMass(*r0));
        }
    }
    let mut support: Vec<Outcome> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    for (p, &w) in parts.iter().zip(weights) {
        for (atom, mass) in p.atoms().expect("non-gaussian") {
            match support.iter().position(|s| *s == atom) {
                Some(k) => probs[k] += w * mass,
                None => {
                    support.push(atom);
                    probs.push(w * mass);
                }
            }
        }
    }
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(OutcomeDist::Categorical { support, probs })
}

/// Re-expresses every law at each decision on a common categorical support
/// whenever the class mixes kinds or supports there. Gaussian decisions are
/// left alone.
fn harmonize(models: &mut [Model]) -> Result<()> {
    let n_dec = models[0].num_decisions();
    for pi in 0..n_dec {
        let first = &models[0].outcomes[pi];
        let uniform = models.iter().all(|m| {
            let o = &m.outcomes[pi];
            match (first, o) {
                (OutcomeDist::Bernoulli(_), OutcomeDist::Bernoulli(_))
                | (OutcomeDist::Rademacher(_), OutcomeDist::Rademacher(_))
                | (OutcomeDist::Gaussian { .. }, OutcomeDist::Gaussian { .. }) => true,
                (OutcomeDist::PointMass(a), OutcomeDist::PointMass(b)) => a == b,
                (
                    OutcomeDist::Categorical { support: a, .. },
                    OutcomeDist::Categorical { support: b, .. },
                ) => a == b,
                _ => false,
            }
        });
        if uniform {
            continue;
        }
        if models.iter().any(|m| matches!(m.outcomes[pi], OutcomeDist::Gaussian { .. })) {
            continue;
        }
        let mut support: Vec<Outcome> = Vec::new();
        for m in models.iter() {
            for (atom, _) in m.outcomes[pi].atoms().expect("non-gaussian") {
                if !support.contains(&atom) {
                    support.push(atom);
                }
            }
        }
        for m in models.iter_mut() {
            let mut probs = vec![0.0; support.len()];
            for (atom, mass) in m.outcomes[pi].atoms().expect("non-gaussian") {
                let k = support.iter().position(|s| *s == atom).expect("in union");
                probs[k] += mass;
            }
            m.outcomes[pi] = OutcomeDist::Categorical { support: support.clone(), probs };
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    decisions: usize,
    models: Vec<Model>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    density_ratio_bound: Option<f64>,
}

/// A finite indexed family of models over a shared decision space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClass", into = "RawClass")]
pub struct ModelClass {
    models: Vec<Model>,
    num_decisions: usize,
    truth: Option<usize>,
    density_ratio_bound: Option<f64>,
}

impl TryFrom<RawClass> for ModelClass {
    type Error = DecError;
    fn try_from(raw: RawClass) -> Result<Self> {
        if raw.models.first().map(Model::num_decisions) != Some(raw.decisions) && !raw.models.is_empty() {
            return Err(DecError::DecisionCountMismatch {
                expected: raw.decisions,
                got: raw.models[0].num_decisions(),
            });
        }
        let mut class = ModelClass::new(raw.models)?;
        if let Some(t) = raw.truth {
            class = class.with_truth(t)?;
        }
        class.density_ratio_bound = raw.density_ratio_bound;
        Ok(class)
    }
}

impl From<ModelClass> for RawClass {
    fn from(c: ModelClass) -> Self {
        RawClass {
            decisions: c.num_decisions,
            models: c.models,
            truth: c.truth,
            density_ratio_bound: c.density_ratio_bound,
        }
    }
}

impl ModelClass {
    pub fn new(mut models: Vec<Model>) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| DecError::InvalidParams("a model class needs at least one model".into()))?;
        let num_decisions = first.num_decisions();
        for m in &models {
            if m.num_decisions() != num_decisions {
                return Err(DecError::DecisionCountMismatch { expected: num_decisions, got: m.num_decisions() });
            }
        }
        harmonize(&mut models)?;
        Ok(ModelClass { models, num_decisions, truth: None, density_ratio_bound: None })
    }

    /// Class of Bernoulli-reward models given by their mean vectors.
    pub fn bernoulli(means: &[Vec<f64>]) -> Result<Self> {
        ModelClass::new(means.iter().map(|m| Model::bernoulli(m)).collect::<Result<_>>()?)
    }

    pub fn with_truth(mut self, truth: usize) -> Result<Self> {
        if truth >= self.models.len() {
            return Err(DecError::IndexOutOfRange { index: truth, len: self.models.len() });
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn num_decisions(&self) -> usize {
        self.num_decisions
    }

    pub fn models(&self) -> &[Model] {
        &self.models
    }

    pub fn model(&self, i: usize) -> &Model {
        &self.models[i]
    }

    pub fn truth(&self) -> Option<usize> {
        self.truth
    }

    pub fn density_ratio_bound(&self) -> Option<f64> {
        self.density_ratio_bound
    }

    /// Subclass keeping the given indices in order; the truth index follows
    /// its model if retained.
    pub fn subclass(&self, indices: &[usize]) -> Result<ModelClass> {
        if indices.is_empty() {
            return Err(DecError::EmptyActiveSet);
        }
        let models = indices.iter().map(|&i| self.models[i].clone()).collect();
        let truth = self.truth.and_then(|t| indices.iter().position(|&i| i == t));
        Ok(ModelClass { models, num_decisions: self.num_decisions, truth, density_ratio_bound: self.density_ratio_bound })
    }

    /// Indices of models whose optimal value is at most the reference's plus ε.
    pub fn localize_indices(&self, reference: &Model, eps: f64) -> Vec<usize> {
        let ref_opt = reference.best_decision().1;
        (0..self.len()).filter(|&i| ref_opt >= self.models[i].best_decision().1 - eps).collect()
    }

    pub fn localize(&self, reference: &Model, eps: f64) -> Result<ModelClass> {
        self.subclass(&self.localize_indices(reference, eps))
    }

    /// Indices of models whose gap profile is uniformly within ε of the reference's.
    pub fn localize_linf_indices(&self, reference: &Model, eps: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                let m = &self.models[i];
                (0..self.num_decisions).all(|pi| (m.gap(pi) - reference.gap(pi)).abs() <= eps)
            })
            .collect()
    }

    pub fn localize_linf(&self, reference: &Model, eps: f64) -> Result<ModelClass> {
        self.subclass(&self.localize_linf_indices(reference, eps))
    }

    /// The model whose law at each decision is the weighted mixture of the class.
    pub fn mixture(&self, weights: &[f64]) -> Result<Model> {
        if weights.len() != self.len() {
            return Err(DecError::WeightDim { expected: self.len(), got: weights.len() });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(DecError::InvalidParams("mixture weights must lie on the simplex".into()));
        }
        let outcomes = (0..self.num_decisions)
            .map(|pi| {
                let parts: Vec<&OutcomeDist> = self.models.iter().map(|m| &m.outcomes[pi]).collect();
                mix_outcomes(&parts, weights)
            })
            .collect::<Result<Vec<_>>>()?;
        Model::new(outcomes)
    }

    /// Appends a model, re-harmonizing supports.
    pub fn with_model(&self, model: Model) -> Result<ModelClass> {
        let mut models = self.models.clone();
        models.push(model);
        let mut c = ModelClass::new(models)?;
        c.truth = self.truth;
        c.density_ratio_bound = self.density_ratio_bound;
        Ok(c)
    }
}
