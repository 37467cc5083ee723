//! The estimation-to-decisions loop and its per-round decision rules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dec::{cost_matrix_randomized, dec_lp, dec_randomized, evaluate_witness};
use crate::error::{DecError, Result};
use crate::estimation::{default_radius, predict, predict_restricted, ConfidenceTracker, OracleState};
use crate::models::{Model, ModelClass};
use crate::probkit::DivergenceKind;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum E2dOption {
    /// Min-max against the posterior mixture over the whole class.
    I,
    /// Min-max over a shrinking confidence set, against the restricted mixture.
    II,
    /// Coarsened-posterior rule.
    Bayes,
    /// Divergence averaged over the posterior as a randomized estimator.
    Generalized,
    /// Option I applied to the slice of the current context.
    Contextual,
}

fn default_divergence() -> DivergenceKind {
    DivergenceKind::HellingerSq
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rounds: usize,
    pub gamma: f64,
    pub option: E2dOption,
    #[serde(default = "default_divergence")]
    pub divergence: DivergenceKind,
    #[serde(default)]
    pub seed: u64,
    /// Index of this run under `seed`; independent runs use distinct values.
    #[serde(default)]
    pub run: u64,
    #[serde(default)]
    pub smoothing: f64,
    /// Squared confidence radius for Option II.
    #[serde(default)]
    pub radius_sq: Option<f64>,
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn new(rounds: usize, gamma: f64, option: E2dOption) -> Self {
        ExperimentConfig {
            rounds,
            gamma,
            option,
            divergence: DivergenceKind::HellingerSq,
            seed: 0,
            run: 0,
            smoothing: 0.0,
            radius_sq: None,
            prior: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(DecError::InvalidParams(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(0.0..1.0).contains(&self.smoothing) {
            return Err(DecError::InvalidParams(format!("smoothing {} outside [0,1)", self.smoothing)));
        }
        if let Some(r) = self.radius_sq {
            if !(r >= 0.0) {
                return Err(DecError::InvalidParams(format!("radius {r} must be nonnegative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub pi: usize,
    pub r: f64,
    pub inst_regret: f64,
    pub dec_value: f64,
    pub hell_inc: f64,
    pub cum_regret: f64,
    pub cum_est: f64,
    /// Value reported by the option's own optimization problem.
    pub solver_value: f64,
    pub context: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub rounds: usize,
    pub gamma: f64,
    pub cum_regret: f64,
    pub est_h: f64,
    pub reg_kl: f64,
    pub sum_dec: f64,
    /// `sum_dec + gamma * est_h`, which upper bounds `cum_regret` pathwise.
    pub bound_rhs: f64,
    pub empirical_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub records: Vec<RoundRecord>,
    pub summary: TraceSummary,
}

/// Estimator used in a round: a finite mixture of models with weights.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub models: Vec<Model>,
    pub weights: Vec<f64>,
}

impl Estimate {
    fn single(m: Model) -> Self {
        Estimate { models: vec![m], weights: vec![1.0] }
    }

    /// `E_{pi~p} E_nu D_H^2(target(pi), estimate(pi))`.
    pub fn hellinger_error(&self, target: &Model, p: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (m, &w) in self.models.iter().zip(&self.weights) {
            if w > 0.0 {
                total += w * target.expected_divergence(DivergenceKind::HellingerSq, m, p)?;
            }
        }
        Ok(total)
    }
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub p: Vec<f64>,
    pub solver_value: f64,
    pub estimate: Estimate,
}

/// Per-run mutable state beyond the posterior.
#[derive(Debug, Clone)]
pub struct StepContext {
    tracker: Option<ConfidenceTracker>,
}

impl StepContext {
    pub fn new(class: &ModelClass, cfg: &ExperimentConfig) -> Self {
        let tracker = (cfg.option == E2dOption::II)
            .then(|| ConfidenceTracker::new(class.len(), cfg.radius_sq.unwrap_or_else(|| default_radius(class.len()))));
        StepContext { tracker }
    }

    pub fn active(&self) -> Option<&[usize]> {
        self.tracker.as_ref().map(|t| t.active())
    }

    fn record(&mut self, class: &ModelClass, p: &[f64], estimate: &Estimate) -> Result<()> {
        if let Some(t) = self.tracker.as_mut() {
            t.record(class, p, &estimate.models[0])?;
        }
        Ok(())
    }
}

/// Decision distribution for one round of Options I, II and Generalized.
pub fn e2d_step(
    option: E2dOption,
    state: &OracleState,
    class: &ModelClass,
    gamma: f64,
    div: DivergenceKind,
    smoothing: f64,
    ctx: &StepContext,
) -> Result<StepOutput> {
    match option {
        E2dOption::I | E2dOption::Contextual => {
            let mhat = predict(state, class, smoothing)?;
            let cert = dec_lp(class, &mhat, gamma, div)?;
            Ok(StepOutput { p: cert.witness, solver_value: cert.value, estimate: Estimate::single(mhat) })
        }
        E2dOption::II => {
            let all: Vec<usize> = (0..class.len()).collect();
            let active = ctx.active().unwrap_or(&all);
            if active.len() == class.len() {
                return e2d_step(E2dOption::I, state, class, gamma, div, smoothing, ctx);
            }
            let mhat = predict_restricted(state, class, active)?.smoothed(smoothing)?;
            let sub = class.subclass(active)?;
            let cert = dec_lp(&sub, &mhat, gamma, div)?;
            Ok(StepOutput { p: cert.witness, solver_value: cert.value, estimate: Estimate::single(mhat) })
        }
        E2dOption::Generalized => {
            let nu = state.weights();
            let cert = dec_randomized(class, class.models(), &nu, gamma, div)?;
            let estimate = Estimate { models: class.models().to_vec(), weights: nu };
            Ok(StepOutput { p: cert.witness, solver_value: cert.value, estimate })
        }
        E2dOption::Bayes => {
            let b = e2d_bayes_step(class, &state.weights(), gamma)?;
            Ok(StepOutput { p: b.p, solver_value: b.value, estimate: Estimate::single(b.mixture) })
        }
    }
}

#[derive(Debug, Clone)]
pub struct BayesStep {
    pub p: Vec<f64>,
    pub value: f64,
    /// Posterior mixture.
    pub mixture: Model,
    /// One model per optimal decision with posterior mass, in decision order.
    pub coarsened: Vec<Model>,
    pub coarsened_decisions: Vec<usize>,
    pub coarsened_weights: Vec<f64>,
}

/// Coarsened-posterior rule: group models by optimal decision, mix within
/// groups, and play the decision minimizing the group-averaged objective
/// `gap - gamma * D_H^2(group model, posterior mixture)`.
pub fn e2d_bayes_step(class: &ModelClass, posterior: &[f64], gamma: f64) -> Result<BayesStep> {
    if posterior.len() != class.len() {
        return Err(DecError::WeightDim { expected: class.len(), got: posterior.len() });
    }
    let mixture = class.mixture(posterior)?;
    let a = class.num_decisions();
    let mut coarsened = Vec::new();
    let mut coarsened_decisions = Vec::new();
    let mut coarsened_weights = Vec::new();
    for d in 0..a {
        let members: Vec<usize> = (0..class.len())
            .filter(|&i| class.model(i).best_decision().0 == d && posterior[i] > 0.0)
            .collect();
        let mass: f64 = members.iter().map(|&i| posterior[i]).sum();
        if members.is_empty() || mass <= 0.0 {
            continue;
        }
        let w: Vec<f64> = members.iter().map(|&i| posterior[i] / mass).collect();
        coarsened.push(class.subclass(&members)?.mixture(&w)?);
        coarsened_decisions.push(d);
        coarsened_weights.push(mass);
    }
    let mut expected = vec![0.0; a];
    for ((m, &d), &w) in coarsened.iter().zip(&coarsened_decisions).zip(&coarsened_weights) {
        for (pi, e) in expected.iter_mut().enumerate() {
            let h = m.divergence_at(DivergenceKind::HellingerSq, &mixture, pi)?;
            *e += w * (m.value(d) - m.value(pi) - gamma * h);
        }
    }
    let (best, value) = expected
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let mut p = vec![0.0; a];
    p[best] = 1.0;
    Ok(BayesStep { p, value, mixture, coarsened, coarsened_decisions, coarsened_weights })
}

/// Worst-case objective of the played distribution over the whole class,
/// with the Hellinger divergence to the round's estimator.
fn certified_value(class: &ModelClass, estimate: &Estimate, p: &[f64], gamma: f64) -> Result<f64> {
    let costs = cost_matrix_randomized(class, &estimate.models, &estimate.weights, gamma, DivergenceKind::HellingerSq)?;
    Ok(evaluate_witness(&costs, p).into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in p.iter().enumerate() {
        if w > 0.0 {
            last = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Finite-context class: `slices[x]` holds every model's restriction to context x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextualClass {
    pub slices: Vec<ModelClass>,
    #[serde(default)]
    pub context_probs: Option<Vec<f64>>,
}

impl ContextualClass {
    pub fn new(slices: Vec<ModelClass>) -> Result<Self> {
        let c = ContextualClass { slices, context_probs: None };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.slices.first().ok_or_else(|| DecError::InvalidParams("no contexts".into()))?;
        for s in &self.slices {
            if s.len() != first.len() {
                return Err(DecError::InvalidParams("every context slice must list the same models".into()));
            }
        }
        if let Some(p) = &self.context_probs {
            if p.len() != self.slices.len() || p.iter().any(|&w| w < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(DecError::InvalidParams("context_probs must be a distribution over contexts".into()));
            }
        }
        Ok(())
    }

    pub fn num_models(&self) -> usize {
        self.slices[0].len()
    }

    pub fn slice(&self, x: usize) -> Result<&ModelClass> {
        self.slices.get(x).ok_or(DecError::UnknownContext(x))
    }
}

/// Option I on the slice of context `x`, with a posterior shared across contexts.
pub fn contextual_e2d_step(
    x: usize,
    class: &ContextualClass,
    state: &OracleState,
    gamma: f64,
    div: DivergenceKind,
) -> Result<StepOutput> {
    let slice = class.slice(x)?;
    e2d_step(E2dOption::I, state, slice, gamma, div, 0.0, &StepContext { tracker: None })
}

struct Accumulator {
    records: Vec<RoundRecord>,
    cum_regret: f64,
    cum_est: f64,
    sum_dec: f64,
    empirical: f64,
}

impl Accumulator {
    fn new(rounds: usize) -> Self {
        Accumulator { records: Vec::with_capacity(rounds), cum_regret: 0.0, cum_est: 0.0, sum_dec: 0.0, empirical: 0.0 }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, t: usize, pi: usize, r: f64, best: f64, inst: f64, dec: f64, hell: f64, solver: f64, context: usize, gamma: f64) -> Result<()> {
        if inst > dec + gamma * hell + 1e-9 {
            return Err(DecError::NumericFailure(format!(
                "round {t}: regret {inst} exceeds certified value {dec} + gamma * {hell}"
            )));
        }
        self.cum_regret += inst;
        self.cum_est += hell;
        self.sum_dec += dec;
        self.empirical += best - r;
        self.records.push(RoundRecord {
            t,
            pi,
            r,
            inst_regret: inst,
            dec_value: dec,
            hell_inc: hell,
            cum_regret: self.cum_regret,
            cum_est: self.cum_est,
            solver_value: solver,
            context,
        });
        Ok(())
    }

    fn finish(self, cfg: &ExperimentConfig, state: &OracleState) -> RegretTrace {
        let summary = TraceSummary {
            rounds: cfg.rounds,
            gamma: cfg.gamma,
            cum_regret: self.cum_regret,
            est_h: self.cum_est,
            reg_kl: state.reg_kl(),
            sum_dec: self.sum_dec,
            bound_rhs: self.sum_dec + cfg.gamma * self.cum_est,
            empirical_regret: self.empirical,
        };
        RegretTrace { records: self.records, summary }
    }
}

fn initial_state(n: usize, cfg: &ExperimentConfig) -> Result<OracleState> {
    match &cfg.prior {
        Some(p) => {
            if p.len() != n {
                return Err(DecError::WeightDim { expected: n, got: p.len() });
            }
            OracleState::with_prior(p)
        }
        None => Ok(OracleState::new(n)),
    }
}

/// Runs `cfg.rounds` rounds against the model `truth` of `class`.
///
/// Each round records the expected regret of the played distribution, the
/// worst-case Hellinger objective of that distribution over the class, and
/// the Hellinger error of the estimator at the truth. The run fails if the
/// per-round inequality `regret <= value + gamma * error` is ever violated.
pub fn run_experiment(class: &ModelClass, truth: usize, cfg: &ExperimentConfig) -> Result<RegretTrace> {
    cfg.validate()?;
    if truth >= class.len() {
        return Err(DecError::IndexOutOfRange { index: truth, len: class.len() });
    }
    if cfg.option == E2dOption::Contextual {
        let cc = ContextualClass::new(vec![class.clone()])?;
        return run_contextual(&cc, truth, cfg);
    }
    let mstar = class.model(truth);
    let (_, best) = mstar.best_decision();
    let mut state = initial_state(class.len(), cfg)?;
    let mut ctx = StepContext::new(class, cfg);
    let mut acc = Accumulator::new(cfg.rounds);
    for t in 1..=cfg.rounds {
        let mut rng = stream(cfg.seed, cfg.run, t as u64);
        let step = e2d_step(cfg.option, &state, class, cfg.gamma, cfg.divergence, cfg.smoothing, &ctx)?;
        let dec = certified_value(class, &step.estimate, &step.p, cfg.gamma)?;
        let inst: f64 = step.p.iter().enumerate().map(|(pi, w)| w * mstar.gap(pi)).sum();
        let hell = step.estimate.hellinger_error(mstar, &step.p)?;
        let pi = sample_index(&step.p, &mut rng);
        let x = mstar.outcome(pi).sample(&mut rng);
        state.aggregate_update(class, pi, &x)?;
        ctx.record(class, &step.p, &step.estimate)?;
        acc.push(t, pi, x.reward, best, inst, dec, hell, step.solver_value, 0, cfg.gamma)?;
    }
    Ok(acc.finish(cfg, &state))
}

/// Contextual variant: contexts are drawn i.i.d. (uniform unless
/// `context_probs` is set) and Option I runs on the current slice.
pub fn run_contextual(class: &ContextualClass, truth: usize, cfg: &ExperimentConfig) -> Result<RegretTrace> {
    cfg.validate()?;
    class.validate()?;
    if truth >= class.num_models() {
        return Err(DecError::IndexOutOfRange { index: truth, len: class.num_models() });
    }
    let n_ctx = class.slices.len();
    let probs = class.context_probs.clone().unwrap_or_else(|| vec![1.0 / n_ctx as f64; n_ctx]);
    let mut state = initial_state(class.num_models(), cfg)?;
    let mut acc = Accumulator::new(cfg.rounds);
    for t in 1..=cfg.rounds {
        let mut rng = stream(cfg.seed, cfg.run, t as u64);
        let x = if n_ctx == 1 { 0 } else { sample_index(&probs, &mut rng) };
        let slice = class.slice(x)?;
        let mstar = slice.model(truth);
        let step = contextual_e2d_step(x, class, &state, cfg.gamma, cfg.divergence)?;
        let dec = certified_value(slice, &step.estimate, &step.p, cfg.gamma)?;
        let inst: f64 = step.p.iter().enumerate().map(|(pi, w)| w * mstar.gap(pi)).sum();
        let hell = step.estimate.hellinger_error(mstar, &step.p)?;
        let pi = sample_index(&step.p, &mut rng);
        let obs = mstar.outcome(pi).sample(&mut rng);
        state.aggregate_update(slice, pi, &obs)?;
        acc.push(t, pi, obs.reward, mstar.best_decision().1, inst, dec, hell, step.solver_value, x, cfg.gamma)?;
    }
    Ok(acc.finish(cfg, &state))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_models() -> ModelClass {
        ModelClass::bernoulli(&[vec![0.6, 0.5], vec![0.5, 0.6]]).unwrap()
    }

    #[test]
    fn option_one_with_point_posterior() {
        let c = two_models();
        let s = OracleState::with_prior(&[1.0, 0.0]).unwrap();
        let cfg = ExperimentConfig::new(1, 1.0, E2dOption::I);
        let out = e2d_step(E2dOption::I, &s, &c, 1.0, DivergenceKind::SquaredMean, 0.0, &StepContext::new(&c, &cfg)).unwrap();
        assert!((out.p[0] - 0.55).abs() < 1e-9);
        assert!((out.solver_value - 0.045).abs() < 1e-9);
    }

    #[test]
    fn option_two_with_infinite_radius_matches_option_one() {
        let c = ModelClass::bernoulli(&[vec![0.6, 0.5, 0.2], vec![0.5, 0.6, 0.4], vec![0.3, 0.3, 0.7]]).unwrap();
        let mut cfg1 = ExperimentConfig::new(30, 2.0, E2dOption::I);
        cfg1.seed = 3;
        let mut cfg2 = cfg1.clone();
        cfg2.option = E2dOption::II;
        cfg2.radius_sq = Some(f64::INFINITY);
        let a = run_experiment(&c, 2, &cfg1).unwrap();
        let b = run_experiment(&c, 2, &cfg2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_and_empty_runs() {
        let c = ModelClass::bernoulli(&[vec![0.2, 0.9]]).unwrap();
        for opt in [E2dOption::I, E2dOption::II, E2dOption::Bayes, E2dOption::Generalized, E2dOption::Contextual] {
            let tr = run_experiment(&c, 0, &ExperimentConfig::new(20, 1.0, opt)).unwrap();
            assert_eq!(tr.summary.cum_regret, 0.0);
            assert!(tr.records.iter().all(|r| r.pi == 1 && r.dec_value.abs() < 1e-12));
        }
        let tr = run_experiment(&c, 0, &ExperimentConfig::new(0, 1.0, E2dOption::I)).unwrap();
        assert!(tr.records.is_empty());
    }

    #[test]
    fn bayes_coarsening() {
        let c = two_models();
        let b = e2d_bayes_step(&c, &[1.0, 0.0], 1.0).unwrap();
        assert_eq!(b.p, vec![1.0, 0.0]);
        let b = e2d_bayes_step(&c, &[0.5, 0.5], 1.0).unwrap();
        assert_eq!(b.coarsened_decisions, vec![0, 1]);
        assert_eq!(b.coarsened_weights, vec![0.5, 0.5]);
        assert_eq!(b.coarsened[0], *c.model(0));
        assert!((b.mixture.value(0) - 0.55).abs() < 1e-15);
        let shared = ModelClass::bernoulli(&[vec![0.6, 0.5], vec![0.8, 0.1]]).unwrap();
        let b = e2d_bayes_step(&shared, &[0.5, 0.5], 1.0).unwrap();
        assert_eq!(b.coarsened.len(), 1);
        assert!((b.coarsened[0].value(0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn contextual_slices() {
        let x0 = ModelClass::bernoulli(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        let x1 = ModelClass::bernoulli(&[vec![0.3, 0.7], vec![0.7, 0.3]]).unwrap();
        let cc = ContextualClass::new(vec![x0.clone(), x1.clone()]).unwrap();
        let s = OracleState::with_prior(&[0.8, 0.2]).unwrap();
        let a = contextual_e2d_step(0, &cc, &s, 2.0, DivergenceKind::HellingerSq).unwrap();
        let b = contextual_e2d_step(1, &cc, &s, 2.0, DivergenceKind::HellingerSq).unwrap();
        assert_ne!(a.p, b.p);
        let m0 = predict(&s, &x0, 0.0).unwrap();
        assert_eq!(a.p, dec_lp(&x0, &m0, 2.0, DivergenceKind::HellingerSq).unwrap().witness);
        assert!(matches!(contextual_e2d_step(2, &cc, &s, 2.0, DivergenceKind::HellingerSq), Err(DecError::UnknownContext(2))));

        let single = ContextualClass::new(vec![x0.clone()]).unwrap();
        let mut cfg = ExperimentConfig::new(25, 2.0, E2dOption::Contextual);
        cfg.seed = 9;
        let ctx = run_contextual(&single, 1, &cfg).unwrap();
        cfg.option = E2dOption::I;
        let plain = run_experiment(&x0, 1, &cfg).unwrap();
        assert_eq!(ctx.records, plain.records);

        let tr = run_contextual(&cc, 0, &ExperimentConfig { seed: 4, ..ExperimentConfig::new(40, 2.0, E2dOption::Contextual) }).unwrap();
        assert!(tr.records.iter().any(|r| r.context == 1) && tr.records.iter().any(|r| r.context == 0));
    }

    #[test]
    fn determinism_and_prefix_sums() {
        let c = ModelClass::bernoulli(&[vec![0.5, 0.7, 0.5], vec![0.7, 0.5, 0.5], vec![0.5, 0.5, 0.7]]).unwrap();
        for opt in [E2dOption::I, E2dOption::II, E2dOption::Bayes, E2dOption::Generalized] {
            let cfg = ExperimentConfig { seed: 11, ..ExperimentConfig::new(60, 3.0, opt) };
            let a = run_experiment(&c, 1, &cfg).unwrap();
            let b = run_experiment(&c, 1, &cfg).unwrap();
            assert_eq!(a, b);
            let mut s = 0.0;
            for r in &a.records {
                s += r.inst_regret;
                assert_eq!(r.cum_regret, s);
                assert!(r.inst_regret <= r.dec_value + cfg.gamma * r.hell_inc + 1e-9);
            }
            assert!(a.summary.cum_regret <= a.summary.bound_rhs + 1e-9);
        }
    }

    #[test]
    fn gaussian_class_needs_generalized() {
        let g = |m: f64| crate::probkit::OutcomeDist::gaussian(m, 1.0).unwrap();
        let c = ModelClass::new(vec![Model::new(vec![g(0.0), g(0.5)]).unwrap(), Model::new(vec![g(0.5), g(0.0)]).unwrap()]).unwrap();
        assert!(run_experiment(&c, 0, &ExperimentConfig::new(5, 1.0, E2dOption::I)).is_err());
        let tr = run_experiment(&c, 0, &ExperimentConfig::new(30, 1.0, E2dOption::Generalized)).unwrap();
        assert_eq!(tr.records.len(), 30);
    }

    #[test]
    fn config_json() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"rounds":10,"gamma":2.0,"option":"II","divergence":"hellinger"}"#).unwrap();
        assert_eq!(cfg.option, E2dOption::II);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"rounds":10,"gamma":2.0,"option":"I","bogus":1}"#).is_err());
        assert!(ExperimentConfig::new(1, 0.0, E2dOption::I).validate().is_err());
    }
}
