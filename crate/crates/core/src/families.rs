//! Hard-instance families: a reference model and alternatives whose regret
//! and information weights certify a lower bound on the DEC.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dec::dec_dual_lp;
use crate::error::{DecError, Result};
use crate::mdp::{occupancy, trajectory_hellinger, value_iteration, policy_value, Policy, TabularMdp};
use crate::models::{Model, ModelClass};
use crate::probkit::{DivergenceKind, OutcomeDist};
use crate::rng::stream;

const CHECK_TOL: f64 = 1e-12;
const NEAR_ORTHOGONAL_DRAWS: usize = 100_000;

/// Parameters of each built-in construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Bernoulli arms, alternative i raises arm i by `gap`.
    Mab { actions: usize, gap: f64 },
    /// Rademacher rewards with mean `<gap e_i, x>` on a finite subset of the unit ball.
    Linear {
        dim: usize,
        gap: f64,
        #[serde(default)]
        decisions: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        seed: u64,
    },
    /// Bump functions of height `eps` on a greedy 2eps-packing of `points`.
    Lipschitz { points: Vec<Vec<f64>>, eps: f64 },
    /// `relu(<v, x> - (1 - eps))` for `v = +-e_i`, Rademacher rewards.
    Relu {
        dim: usize,
        eps: f64,
        #[serde(default)]
        decisions: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        seed: u64,
    },
    /// Multi-armed bandit whose reference already has gap `gap`.
    GapMab { actions: usize, gap: f64 },
    /// Linear bandit on the standard basis whose reference has gap `gap`.
    GapLinear { dim: usize, gap: f64 },
    /// Binary tree MDP leading to leaves with a wait action.
    Tree { states: usize, actions: usize, horizon: usize, gap: f64 },
    /// Linearly realizable MDP built on near-orthogonal unit vectors.
    LinearQStar {
        dim: usize,
        horizon: usize,
        gap: f64,
        #[serde(default)]
        m: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
}

impl FamilySpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FamilySpec::Mab { .. } => "mab",
            FamilySpec::Linear { .. } => "linear",
            FamilySpec::Lipschitz { .. } => "lipschitz",
            FamilySpec::Relu { .. } => "relu",
            FamilySpec::GapMab { .. } => "gap_mab",
            FamilySpec::GapLinear { .. } => "gap_linear",
            FamilySpec::Tree { .. } => "tree",
            FamilySpec::LinearQStar { .. } => "linear_qstar",
        }
    }
}

/// How the per-alternative weights of an MDP family are read off the
/// reference occupancy of a policy.
#[derive(Debug, Clone, PartialEq)]
pub enum MdpWeights {
    /// `u_i = v_i = d_h(s, a)` for the i-th triple.
    Visitation(Vec<(usize, usize, usize)>),
    /// `u_i = P(s_1 = i or a_1 = i)`, `v_i = 1/2 sum_h P(s_h != term, a_h = i)`.
    FirstStepOrAction { terminal: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyInstance {
    /// Finite decision set; `u[i][pi]`, `v[i][pi]`.
    Bandit {
        class: ModelClass,
        reference: Model,
        u: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        /// Decision vectors, when decisions live in a vector space.
        decisions: Option<Vec<Vec<f64>>>,
    },
    Mdp { models: Vec<TabularMdp>, reference: TabularMdp, weights: MdpWeights },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardFamily {
    pub spec: FamilySpec,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub instance: FamilyInstance,
}

impl HardFamily {
    pub fn size(&self) -> usize {
        match &self.instance {
            FamilyInstance::Bandit { class, .. } => class.len(),
            FamilyInstance::Mdp { models, .. } => models.len(),
        }
    }

    /// Same instance with different claimed constants.
    pub fn with_constants(mut self, alpha: f64, beta: f64, delta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self.delta = delta;
        self
    }
}

fn invalid(msg: impl Into<String>) -> DecError {
    DecError::InvalidParams(msg.into())
}

fn indicator_table(n: usize, num_decisions: usize, hit: impl Fn(usize, usize) -> bool) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..num_decisions).map(|pi| if hit(i, pi) { 1.0 } else { 0.0 }).collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `+-e_i` for every coordinate, plus random sphere and interior points.
fn default_ball_grid(d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, 0, 0);
    let mut out = Vec::new();
    for i in 0..d {
        out.push(unit(d, i));
        out.push(unit(d, i).into_iter().map(|x| -x).collect());
    }
    for k in 0..4 * d {
        let v = random_unit(&mut rng, d);
        let scale = if k % 2 == 0 { 1.0 } else { rng.random::<f64>() };
        out.push(v.into_iter().map(|x| x * scale).collect());
    }
    out
}

fn check_ball(decisions: &[Vec<f64>], d: usize) -> Result<()> {
    if decisions.iter().any(|x| x.len() != d || dot(x, x) > 1.0 + 1e-12) {
        return Err(invalid("decisions must lie in the unit ball of the stated dimension"));
    }
    Ok(())
}

/// Adds each required point that is not already present.
fn with_points(mut decisions: Vec<Vec<f64>>, required: &[Vec<f64>]) -> Vec<Vec<f64>> {
    for r in required {
        if !decisions.iter().any(|x| x == r) {
            decisions.push(r.clone());
        }
    }
    decisions
}

fn bandit_class(rows: Vec<Vec<OutcomeDist>>) -> Result<ModelClass> {
    ModelClass::new(rows.into_iter().map(Model::new).collect::<Result<Vec<_>>>()?)
}

/// Builds the family described by `spec`.
pub fn make_family(spec: &FamilySpec) -> Result<HardFamily> {
    let (alpha, beta, delta, instance) = match spec {
        &FamilySpec::Mab { actions, gap } => {
            if actions < 2 || !(gap > 0.0 && gap < 0.5) {
                return Err(invalid("mab needs A >= 2 and gap in (0, 1/2)"));
            }
            let class = ModelClass::bernoulli(
                &(0..actions).map(|i| (0..actions).map(|pi| if pi == i { 0.5 + gap } else { 0.5 }).collect()).collect::<Vec<_>>(),
            )?;
            let u = indicator_table(actions, actions, |i, pi| i == pi);
            let instance = FamilyInstance::Bandit {
                class,
                reference: Model::bernoulli(&vec![0.5; actions])?,
                v: u.clone(),
                u,
                decisions: None,
            };
            (gap, 3.0 * gap * gap, 0.0, instance)
        }
        FamilySpec::Linear { dim, gap, decisions, seed } => {
            let (d, gap) = (*dim, *gap);
            if d < 4 || !(gap > 0.0 && gap <= 1.0) {
                return Err(invalid("linear needs d >= 4 and gap in (0, 1]"));
            }
            let basis: Vec<Vec<f64>> = (0..d).map(|i| unit(d, i)).collect();
            let xs = with_points(decisions.clone().unwrap_or_else(|| default_ball_grid(d, *seed)), &basis);
            check_ball(&xs, d)?;
            let rows = (0..d)
                .map(|i| xs.iter().map(|x| OutcomeDist::rademacher(gap * x[i])).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let u = (0..d).map(|i| xs.iter().map(|x| x[i].max(0.0)).collect()).collect();
            let v = (0..d).map(|i| xs.iter().map(|x| x[i] * x[i]).collect()).collect();
            let reference = Model::new(vec![OutcomeDist::Rademacher(0.0); xs.len()])?;
            let instance = FamilyInstance::Bandit { class: bandit_class(rows)?, reference, u, v, decisions: Some(xs) };
            (gap, 0.75 * gap * gap, 0.0, instance)
        }
        FamilySpec::Lipschitz { points, eps } => {
            let eps = *eps;
            if !(eps > 0.0 && eps < 0.5) || points.is_empty() {
                return Err(invalid("lipschitz needs eps in (0, 1/2) and a nonempty grid"));
            }
            let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let mut centers: Vec<usize> = Vec::new();
            for (j, p) in points.iter().enumerate() {
                if centers.iter().all(|&c| dist(&points[c], p) > 2.0 * eps) {
                    centers.push(j);
                }
            }
            if centers.len() < 2 {
                return Err(invalid("the grid admits fewer than two 2eps-separated points"));
            }
            let rows = centers
                .iter()
                .map(|&c| {
                    points
                        .iter()
                        .map(|p| OutcomeDist::bernoulli(0.5 + eps * (1.0 - dist(p, &points[c]) / eps).max(0.0)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let u: Vec<Vec<f64>> = centers
                .iter()
                .map(|&c| points.iter().map(|p| if dist(p, &points[c]) <= eps { 1.0 } else { 0.0 }).collect())
                .collect();
            let instance = FamilyInstance::Bandit {
                class: bandit_class(rows)?,
                reference: Model::bernoulli(&vec![0.5; points.len()])?,
                v: u.clone(),
                u,
                decisions: Some(points.clone()),
            };
            (eps, 3.0 * eps * eps, 0.0, instance)
        }
        FamilySpec::Relu { dim, eps, decisions, seed } => {
            let (d, eps) = (*dim, *eps);
            if d < 2 || !(eps > 0.0 && eps <= 0.25) {
                return Err(invalid("relu needs d >= 2 and eps in (0, 1/4]"));
            }
            let dirs: Vec<Vec<f64>> = (0..d)
                .flat_map(|i| [unit(d, i), unit(d, i).into_iter().map(|x| -x).collect()])
                .collect();
            let xs = with_points(decisions.clone().unwrap_or_else(|| default_ball_grid(d, *seed)), &dirs);
            check_ball(&xs, d)?;
            let f = |v: &[f64], x: &[f64]| (dot(v, x) - (1.0 - eps)).max(0.0);
            let rows = dirs
                .iter()
                .map(|v| xs.iter().map(|x| OutcomeDist::rademacher(f(v, x))).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let u: Vec<Vec<f64>> =
                dirs.iter().map(|v| xs.iter().map(|x| if dot(v, x) > 1.0 - eps { 1.0 } else { 0.0 }).collect()).collect();
            let reference = Model::new(vec![OutcomeDist::Rademacher(0.0); xs.len()])?;
            let instance =
                FamilyInstance::Bandit { class: bandit_class(rows)?, reference, v: u.clone(), u, decisions: Some(xs) };
            (eps, 0.75 * eps * eps, 0.0, instance)
        }
        &FamilySpec::GapMab { actions, gap } => {
            if actions < 2 || !(gap > 0.0 && gap < 0.125) {
                return Err(invalid("gap_mab needs A >= 2 and gap in (0, 1/8)"));
            }
            let means: Vec<Vec<f64>> = (0..actions)
                .map(|i| {
                    (0..actions)
                        .map(|pi| 0.5 + if pi == 0 { gap } else { 0.0 } + if i > 0 && pi == i { 2.0 * gap } else { 0.0 })
                        .collect()
                })
                .collect();
            let class = ModelClass::bernoulli(&means)?;
            let reference = class.model(0).clone();
            let u = indicator_table(actions, actions, |i, pi| i == pi);
            (gap, 5.0 * gap * gap, 0.0, FamilyInstance::Bandit { class, reference, v: u.clone(), u, decisions: None })
        }
        &FamilySpec::GapLinear { dim, gap } => {
            if dim < 2 || !(gap > 0.0 && gap < 0.25) {
                return Err(invalid("gap_linear needs d >= 2 and gap in (0, 1/4)"));
            }
            let theta = |i: usize| -> Vec<f64> {
                let mut t = vec![0.0; dim];
                t[0] = gap;
                if i > 0 {
                    t[i] += 2.0 * gap;
                }
                t
            };
            let rows = (0..dim)
                .map(|i| (0..dim).map(|pi| OutcomeDist::rademacher(theta(i)[pi])).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let class = bandit_class(rows)?;
            let reference = class.model(0).clone();
            let u = indicator_table(dim, dim, |i, pi| i == pi);
            let decisions = Some((0..dim).map(|i| unit(dim, i)).collect());
            (gap, 3.0 * gap * gap, 0.0, FamilyInstance::Bandit { class, reference, v: u.clone(), u, decisions })
        }
        &FamilySpec::Tree { states, actions, horizon, gap } => tree_family(states, actions, horizon, gap)?,
        &FamilySpec::LinearQStar { dim, horizon, gap, m, seed } => linear_qstar_family(dim, horizon, gap, m, seed)?,
    };
    Ok(HardFamily { spec: spec.clone(), alpha, beta, delta, instance })
}

fn tree_family(s: usize, a: usize, h: usize, gap: f64) -> Result<(f64, f64, f64, FamilyInstance)> {
    if s < 2 || !s.is_multiple_of(2) || !(s / 2).is_power_of_two() || a < 2 || !(gap > 0.0 && gap < 0.5) {
        return Err(invalid("tree needs S/2 a power of two, A >= 2 and gap in (0, 1/2)"));
    }
    let depth = (s / 2).trailing_zeros() as usize;
    if h < (2 * depth).max(depth + 1) {
        return Err(invalid(format!("tree needs H >= max(2 log2(S/2), log2(S/2) + 1) = {}", (2 * depth).max(depth + 1))));
    }
    let term = s - 1;
    let first_leaf = s / 2 - 1;
    let is_leaf = |x: usize| x >= first_leaf && x < term;
    let mut next = vec![vec![0usize; a]; s];
    for x in 0..s {
        for act in 0..a {
            next[x][act] = if x == term {
                term
            } else if is_leaf(x) {
                if act == 0 { x } else { term }
            } else if act == 0 {
                2 * x + 1
            } else {
                2 * x + 2
            };
        }
    }
    let kernel: Vec<Vec<Vec<Vec<f64>>>> =
        (0..h).map(|_| (0..s).map(|x| (0..a).map(|act| unit(s, next[x][act])).collect()).collect()).collect();
    let targets: Vec<(usize, usize, usize)> = (depth..h)
        .flat_map(|hh| (first_leaf..term).flat_map(move |x| (1..a).map(move |act| (hh, x, act))))
        .collect();
    let rewards = |bump: Option<(usize, usize, usize)>| -> Vec<Vec<Vec<OutcomeDist>>> {
        (0..h)
            .map(|hh| {
                (0..s)
                    .map(|x| {
                        (0..a)
                            .map(|act| {
                                if hh >= depth && is_leaf(x) && act >= 1 {
                                    OutcomeDist::Bernoulli(0.5 + if bump == Some((hh, x, act)) { gap } else { 0.0 })
                                } else {
                                    OutcomeDist::Bernoulli(0.0)
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    };
    let d1 = unit(s, 0);
    let reference = TabularMdp::new(h, s, a, kernel.clone(), rewards(None), d1.clone())?;
    let models = targets
        .iter()
        .map(|&t| TabularMdp::new(h, s, a, kernel.clone(), rewards(Some(t)), d1.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok((gap, 3.0 * gap * gap, 0.0, FamilyInstance::Mdp { models, reference, weights: MdpWeights::Visitation(targets) }))
}

/// Unit vectors with pairwise `|<v_i, v_j>| <= tol`, drawn one at a time and
/// kept only when compatible with those already accepted.
pub fn near_orthogonal_vectors(d: usize, m: usize, tol: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream(seed, 0, 0);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m);
    for _ in 0..NEAR_ORTHOGONAL_DRAWS {
        if out.len() == m {
            break;
        }
        let v = random_unit(&mut rng, d);
        if out.iter().all(|w| dot(w, &v).abs() <= tol) {
            out.push(v);
        }
    }
    if out.len() < m {
        return Err(invalid(format!("found only {} of {m} near-orthogonal vectors in {NEAR_ORTHOGONAL_DRAWS} draws", out.len())));
    }
    Ok(out)
}

fn linear_qstar_family(
    d: usize,
    h: usize,
    gap: f64,
    m: Option<usize>,
    seed: u64,
) -> Result<(f64, f64, f64, FamilyInstance)> {
    if d < 2 || h < 2 || !(gap > 0.0 && gap <= 1.0 / 6.0) {
        return Err(invalid("linear_qstar needs d >= 2, H >= 2 and gap in (0, 1/6]"));
    }
    let m = m.unwrap_or_else(|| ((gap * gap * d as f64 / 8.0).exp().ceil() as usize).max(4));
    if m < 4 {
        return Err(invalid("linear_qstar needs m >= 4"));
    }
    let vs = near_orthogonal_vectors(d, m, gap, seed)?;
    let term = m;
    let n = m + 1;
    let c = |x: usize, act: usize| dot(&vs[x], &vs[act]) + 2.0 * gap;
    // Action x at state x is unavailable; it behaves like the terminal action.
    let live = |x: usize, act: usize| x != term && act != term && act != x;
    let build = |star: Option<usize>| -> Result<TabularMdp> {
        let mut kernel = Vec::with_capacity(h);
        let mut rewards = Vec::with_capacity(h);
        for hh in 0..h {
            let mut kl = Vec::with_capacity(n);
            let mut rl = Vec::with_capacity(n);
            for x in 0..n {
                let mut krow = Vec::with_capacity(n);
                let mut rrow = Vec::with_capacity(n);
                for act in 0..n {
                    let (row, mean) = if !live(x, act) {
                        (unit(n, term), 0.0)
                    } else if Some(act) == star {
                        let mean = if hh + 1 == h { c(x, act) * dot(&vs[act], &vs[act]) } else { c(x, act) };
                        (unit(n, term), mean)
                    } else {
                        let p = c(x, act);
                        let mut row = vec![0.0; n];
                        row[act] = p;
                        row[term] = 1.0 - p;
                        let mean = match star {
                            Some(st) if hh + 1 == h => c(x, act) * dot(&vs[act], &vs[st]),
                            None if hh + 1 == h => 0.0,
                            _ => -2.0 * gap * p,
                        };
                        (row, mean)
                    };
                    krow.push(row);
                    rrow.push(OutcomeDist::rademacher(mean)?);
                }
                kl.push(krow);
                rl.push(rrow);
            }
            kernel.push(kl);
            rewards.push(rl);
        }
        let mut d1 = vec![1.0 / m as f64; n];
        d1[term] = 0.0;
        let s: f64 = d1.iter().sum();
        d1[0] += 1.0 - s;
        TabularMdp::new(h, n, n, kernel, rewards, d1)
    };
    let reference = build(None)?;
    let models = (0..m).map(|st| build(Some(st))).collect::<Result<Vec<_>>>()?;
    let delta = (3.0 * gap).powi(h as i32 + 1);
    Ok((gap / 2.0, 22.0 * gap, delta, FamilyInstance::Mdp { models, reference, weights: MdpWeights::FirstStepOrAction { terminal: term } }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Random policies checked for MDP families.
    pub sampled_policies: usize,
    /// Deterministic policies are enumerated when there are at most this many.
    pub max_deterministic: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { sampled_policies: 1000, max_deterministic: 4096, seed: 0 }
    }
}

/// Outcome of checking the four family conditions. Slacks are the smallest
/// margin `allowed - observed` over all checked decisions (negative on failure).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub passes: bool,
    pub regret_ok: bool,
    pub information_ok: bool,
    pub u_sum_ok: bool,
    pub v_sum_ok: bool,
    pub regret_slack: f64,
    pub information_slack: f64,
    pub u_sum_slack: f64,
    pub v_sum_slack: f64,
    pub decisions_checked: usize,
    /// True when the decision space was only sampled (randomized MDP policies).
    pub sampled: bool,
}

struct Slacks {
    regret: f64,
    information: f64,
    u_sum: f64,
    v_sum: f64,
}

impl Slacks {
    fn new() -> Self {
        Slacks { regret: f64::INFINITY, information: f64::INFINITY, u_sum: f64::INFINITY, v_sum: f64::INFINITY }
    }

    /// Folds in one decision: regrets, divergences and weights per alternative.
    fn record(&mut self, f: &HardFamily, regret: &[f64], div: &[f64], u: &[f64], v: &[f64]) {
        let n = regret.len() as f64;
        for i in 0..regret.len() {
            self.regret = self.regret.min(regret[i] - f.alpha * (1.0 - u[i]));
            self.information = self.information.min(f.beta * v[i] + f.delta - div[i]);
            let range = |x: f64| x.min(1.0 - x);
            self.u_sum = self.u_sum.min(range(u[i]));
            self.v_sum = self.v_sum.min(range(v[i]));
        }
        self.u_sum = self.u_sum.min(n / 2.0 - u.iter().sum::<f64>());
        self.v_sum = self.v_sum.min(1.0 - v.iter().sum::<f64>());
    }
}

fn mdp_weights(weights: &MdpWeights, reference: &TabularMdp, n: usize, pi: &Policy) -> Result<(Vec<f64>, Vec<f64>)> {
    let occ = occupancy(reference, pi)?;
    Ok(match weights {
        MdpWeights::Visitation(targets) => {
            let u: Vec<f64> = targets.iter().map(|&(h, s, a)| occ.d[h][s][a]).collect();
            (u.clone(), u)
        }
        &MdpWeights::FirstStepOrAction { terminal } => {
            let d1 = reference.initial();
            let u = (0..n)
                .map(|i| d1[i] + (0..terminal).filter(|&s| s != i).map(|s| occ.d[0][s][i]).sum::<f64>())
                .collect();
            let v = (0..n)
                .map(|i| 0.5 * occ.d.iter().map(|layer| (0..terminal).map(|s| layer[s][i]).sum::<f64>()).sum::<f64>())
                .collect();
            (u, v)
        }
    })
}

/// Checks the regret, information and weight-sum conditions of `f`.
///
/// Bandit families are checked exactly on their finite decision sets. MDP
/// families are checked on every deterministic policy when there are few
/// enough, plus `sampled_policies` random policies.
pub fn verify_family(f: &HardFamily, opts: &VerifyOptions) -> Result<FamilyReport> {
    let mut slack = Slacks::new();
    let mut checked = 0usize;
    let mut sampled = false;
    match &f.instance {
        FamilyInstance::Bandit { class, reference, u, v, .. } => {
            for pi in 0..class.num_decisions() {
                let regret: Vec<f64> = class.models().iter().map(|m| m.gap(pi)).collect();
                let div: Vec<f64> = class
                    .models()
                    .iter()
                    .map(|m| m.divergence_at(DivergenceKind::HellingerSq, reference, pi))
                    .collect::<Result<_>>()?;
                let ui: Vec<f64> = u.iter().map(|row| row[pi]).collect();
                let vi: Vec<f64> = v.iter().map(|row| row[pi]).collect();
                slack.record(f, &regret, &div, &ui, &vi);
                checked += 1;
            }
        }
        FamilyInstance::Mdp { models, reference, weights } => {
            let (h, s, a) = (reference.horizon(), reference.num_states(), reference.num_actions());
            let best: Vec<f64> = models.iter().map(|m| value_iteration(m).value).collect();
            let mut policies = Policy::enumerate_deterministic(h, s, a, opts.max_deterministic).unwrap_or_default();
            let mut rng = stream(opts.seed, 0, 0);
            for k in 0..opts.sampled_policies {
                // Alternate between dense random rules and sparse ones near deterministic policies.
                let mut p = Policy::random(h, s, a, &mut rng);
                if k % 2 == 1 {
                    for row in p.table.iter_mut().flatten() {
                        row.iter_mut().for_each(|x| *x = x.powi(8));
                        let t: f64 = row.iter().sum();
                        row.iter_mut().for_each(|x| *x /= t);
                    }
                }
                policies.push(p);
            }
            sampled = opts.sampled_policies > 0 || policies.is_empty();
            for pi in &policies {
                let regret: Vec<f64> =
                    models.iter().zip(&best).map(|(m, b)| policy_value(m, pi).map(|x| b - x)).collect::<Result<_>>()?;
                let div: Vec<f64> = models.iter().map(|m| trajectory_hellinger(m, reference, pi)).collect::<Result<_>>()?;
                let (u, v) = mdp_weights(weights, reference, models.len(), pi)?;
                slack.record(f, &regret, &div, &u, &v);
                checked += 1;
            }
        }
    }
    let ok = |x: f64| x >= -CHECK_TOL;
    let report = FamilyReport {
        passes: ok(slack.regret) && ok(slack.information) && ok(slack.u_sum) && ok(slack.v_sum),
        regret_ok: ok(slack.regret),
        information_ok: ok(slack.information),
        u_sum_ok: ok(slack.u_sum),
        v_sum_ok: ok(slack.v_sum),
        regret_slack: slack.regret,
        information_slack: slack.information,
        u_sum_slack: slack.u_sum,
        v_sum_slack: slack.v_sum,
        decisions_checked: checked,
        sampled,
    };
    Ok(report)
}

/// `alpha/2 - gamma (beta/N + delta)`.
pub fn family_lower_bound(f: &HardFamily, gamma: f64) -> f64 {
    f.alpha / 2.0 - gamma * (f.beta / f.size() as f64 + f.delta)
}

/// Dual LP value on the family's alternatives (bandit families only).
pub fn family_dual_value(f: &HardFamily, gamma: f64) -> Result<Option<f64>> {
    match &f.instance {
        FamilyInstance::Bandit { class, reference, .. } => {
            Ok(Some(dec_dual_lp(class, reference, gamma, DivergenceKind::HellingerSq)?.value))
        }
        FamilyInstance::Mdp { .. } => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mab(a: usize, gap: f64) -> HardFamily {
        make_family(&FamilySpec::Mab { actions: a, gap }).unwrap()
    }

    #[test]
    fn mab_construction() {
        let f = mab(3, 0.1);
        let FamilyInstance::Bandit { class, reference, .. } = &f.instance else { panic!() };
        assert_eq!(class.len(), 3);
        for i in 0..3 {
            for pi in 0..3 {
                assert_eq!(class.model(i).value(pi), if i == pi { 0.6 } else { 0.5 });
            }
        }
        assert!(reference.means().iter().all(|&m| m == 0.5));
        let r = verify_family(&f, &VerifyOptions::default()).unwrap();
        assert!(r.passes);
        assert_eq!((f.alpha, f.delta), (0.1, 0.0));
        assert!((f.beta - 0.03).abs() < 1e-15);
    }

    #[test]
    fn understated_beta_fails() {
        // The exact divergence is about 1.01 gap^2, so 3 gap^2 / 2 still holds; gap^2 / 2 does not.
        let f = mab(3, 0.1);
        assert!(verify_family(&f.clone().with_constants(0.1, 0.015, 0.0), &VerifyOptions::default()).unwrap().passes);
        let r = verify_family(&f.with_constants(0.1, 0.005, 0.0), &VerifyOptions::default()).unwrap();
        assert!(!r.passes && !r.information_ok && r.regret_ok);
    }

    #[test]
    fn lower_bound_formula() {
        let f = mab(4, 0.1);
        assert_eq!(family_lower_bound(&f, 0.0), 0.05);
        let a = 6.0;
        let gamma = 10.0;
        let f = mab(6, a / (12.0 * gamma));
        assert!((family_lower_bound(&f, gamma) - a / (48.0 * gamma)).abs() < 1e-15);
        let f = mab(3, 0.1);
        assert!(family_lower_bound(&f, 5.0).abs() < 1e-15);
    }

    #[test]
    fn dual_lp_dominates_bound() {
        for a in [2usize, 3, 5] {
            for gamma in [1.0, 4.0, 20.0] {
                let f = mab(a, 0.1);
                let dual = family_dual_value(&f, gamma).unwrap().unwrap();
                assert!(dual >= family_lower_bound(&f, gamma) - 1e-9);
            }
        }
    }

    #[test]
    fn mab_family_is_localized() {
        let f = mab(4, 0.1);
        let FamilyInstance::Bandit { class, reference, .. } = &f.instance else { panic!() };
        let all = class.with_model(reference.clone()).unwrap();
        let kept = all.localize_linf_indices(reference, 0.1);
        assert!((0..4).all(|i| kept.contains(&i)));
    }

    #[test]
    fn linear_family() {
        let f = make_family(&FamilySpec::Linear { dim: 4, gap: 0.1, decisions: None, seed: 3 }).unwrap();
        let FamilyInstance::Bandit { class, decisions, .. } = &f.instance else { panic!() };
        let xs = decisions.as_ref().unwrap();
        for (pi, x) in xs.iter().enumerate() {
            assert!((class.model(2).value(pi) - 0.1 * x[2]).abs() < 1e-15);
        }
        assert!((f.beta - 0.75 * 0.01).abs() < 1e-15);
        assert!(verify_family(&f, &VerifyOptions::default()).unwrap().passes);
        assert!(make_family(&FamilySpec::Linear { dim: 3, gap: 0.1, decisions: None, seed: 0 }).is_err());
    }

    #[test]
    fn remaining_bandit_families_pass() {
        let grid: Vec<Vec<f64>> = (0..=40).map(|i| vec![i as f64 / 40.0]).collect();
        let specs = [
            FamilySpec::Lipschitz { points: grid, eps: 0.1 },
            FamilySpec::Relu { dim: 3, eps: 0.2, decisions: None, seed: 1 },
            FamilySpec::GapMab { actions: 5, gap: 0.12 },
            FamilySpec::GapLinear { dim: 4, gap: 0.2 },
        ];
        for spec in &specs {
            let f = make_family(spec).unwrap();
            let r = verify_family(&f, &VerifyOptions::default()).unwrap();
            assert!(r.passes, "{}: {r:?}", spec.kind_name());
            assert!(!r.sampled);
        }
    }

    #[test]
    fn tree_family_shape_and_weights() {
        let f = make_family(&FamilySpec::Tree { states: 4, actions: 2, horizon: 2, gap: 0.1 }).unwrap();
        let FamilyInstance::Mdp { models, reference, .. } = &f.instance else { panic!() };
        assert_eq!(reference.num_states(), 4);
        // Two leaves, one non-wait action, one rewarding layer.
        assert_eq!(models.len(), 2);
        assert!(make_family(&FamilySpec::Tree { states: 8, actions: 2, horizon: 3, gap: 0.1 }).is_err());
        let r = verify_family(&f, &VerifyOptions::default()).unwrap();
        assert!(r.passes, "{r:?}");
        assert_eq!(r.decisions_checked, 256 + 1000);
    }

    #[test]
    fn linear_qstar_construction() {
        let f = make_family(&FamilySpec::LinearQStar { dim: 32, horizon: 2, gap: 1.0 / 6.0, m: None, seed: 0 }).unwrap();
        let FamilyInstance::Mdp { models, reference, .. } = &f.instance else { panic!() };
        assert_eq!(models.len(), 4);
        assert_eq!(reference.num_states(), 5);
        assert!((f.delta - 0.5f64.powi(3)).abs() < 1e-15);
        // The reference earns nothing; each alternative's best policy plays its own action first.
        assert!(value_iteration(reference).value.abs() < 1e-12);
        let vs = near_orthogonal_vectors(32, 4, 1.0 / 6.0, 0).unwrap();
        for i in 0..4 {
            for j in 0..i {
                assert!(dot(&vs[i], &vs[j]).abs() <= 1.0 / 6.0);
            }
        }
    }

    #[test]
    fn linear_qstar_conditions_hold() {
        for (dim, horizon, gap) in [(16, 2, 1.0 / 6.0), (64, 3, 0.1), (8, 3, 1.0 / 6.0)] {
            let f = make_family(&FamilySpec::LinearQStar { dim, horizon, gap, m: None, seed: 7 }).unwrap();
            let r = verify_family(&f, &VerifyOptions { sampled_policies: 300, ..Default::default() }).unwrap();
            assert!(r.passes, "d={dim} H={horizon}: {r:?}");
            assert!(r.sampled);
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = FamilySpec::Tree { states: 8, actions: 3, horizon: 4, gap: 0.2 };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"tree\""));
        assert_eq!(serde_json::from_str::<FamilySpec>(&text).unwrap(), spec);
        assert!(serde_json::from_str::<FamilySpec>(r#"{"kind":"mab","actions":3,"gap":0.1,"x":1}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn mab_family_holds_and_bound_decreases(a in 2usize..9, gap in 0.01f64..0.45, g1 in 0.0f64..50.0, g2 in 0.0f64..50.0) {
            let f = mab(a, gap);
            let r = verify_family(&f, &VerifyOptions::default()).unwrap();
            prop_assert!(r.passes);
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            prop_assert!(family_lower_bound(&f, hi) <= family_lower_bound(&f, lo));
            prop_assert!(family_lower_bound(&f, lo) <= f.alpha / 2.0);
        }

        #[test]
        fn tree_visitation_weights_sum_below_one(seed in 0u64..1000) {
            let f = make_family(&FamilySpec::Tree { states: 8, actions: 3, horizon: 4, gap: 0.2 }).unwrap();
            let r = verify_family(&f, &VerifyOptions { sampled_policies: 20, seed, ..Default::default() }).unwrap();
            prop_assert!(r.v_sum_ok && r.u_sum_ok);
        }
    }
}
