//! Finite-horizon tabular MDPs: planning, occupancy measures, exact
//! trajectory divergences, and the inverse-gap-weighted policy cover.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dec::bisect_normalizer;
use crate::error::{DecError, Result};
use crate::lp::{Cmp, LinearProgram};
use crate::probkit::{affinity, divergence, DivergenceKind, Outcome, OutcomeDist};

const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMdp {
    #[serde(rename = "H")]
    h: usize,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "A")]
    a: usize,
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "R")]
    r: Vec<Vec<Vec<OutcomeDist>>>,
    d1: Vec<f64>,
}

/// Episodic MDP with layer-dependent kernels `p[h][s][a][s']`, reward laws
/// `r[h][s][a]` and initial distribution `d1`. Layers are 0-based; the
/// kernel of the last layer is never used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMdp", into = "RawMdp")]
pub struct TabularMdp {
    h: usize,
    s: usize,
    a: usize,
    p: Vec<Vec<Vec<Vec<f64>>>>,
    r: Vec<Vec<Vec<OutcomeDist>>>,
    d1: Vec<f64>,
}

impl TryFrom<RawMdp> for TabularMdp {
    type Error = DecError;
    fn try_from(raw: RawMdp) -> Result<Self> {
        let mut p = raw.p;
        if p.len() + 1 == raw.h {
            // Terminal kernel omitted: pad with self-loops.
            p.push((0..raw.s).map(|s| vec![unit(raw.s, s); raw.a]).collect());
        }
        TabularMdp::new(raw.h, raw.s, raw.a, p, raw.r, raw.d1)
    }
}

impl From<TabularMdp> for RawMdp {
    fn from(m: TabularMdp) -> Self {
        RawMdp { h: m.h, s: m.s, a: m.a, p: m.p, r: m.r, d1: m.d1 }
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn check_simplex(row: &[f64], what: &str) -> Result<()> {
    let s: f64 = row.iter().sum();
    if row.iter().any(|&x| !(x >= 0.0)) || (s - 1.0).abs() > ROW_TOL {
        return Err(DecError::InvalidParams(format!("{what} is not a distribution (sum {s})")));
    }
    Ok(())
}

/// Normalizes a nonnegative vector so that it sums to one.
pub fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

impl TabularMdp {
    pub fn new(
        h: usize,
        s: usize,
        a: usize,
        p: Vec<Vec<Vec<Vec<f64>>>>,
        r: Vec<Vec<Vec<OutcomeDist>>>,
        d1: Vec<f64>,
    ) -> Result<Self> {
        if h == 0 || s == 0 || a == 0 {
            return Err(DecError::InvalidParams("H, S and A must be positive".into()));
        }
        let shape_err = |what: &str| DecError::InvalidParams(format!("{what} has the wrong shape"));
        if p.len() != h || r.len() != h || d1.len() != s {
            return Err(shape_err("P, R or d1"));
        }
        for layer in &p {
            if layer.len() != s || layer.iter().any(|row| row.len() != a || row.iter().any(|x| x.len() != s)) {
                return Err(shape_err("P"));
            }
            for row in layer.iter().flatten() {
                check_simplex(row, "a transition row")?;
            }
        }
        for layer in &r {
            if layer.len() != s || layer.iter().any(|row| row.len() != a) {
                return Err(shape_err("R"));
            }
            for d in layer.iter().flatten() {
                d.validate()?;
            }
        }
        check_simplex(&d1, "d1")?;
        Ok(TabularMdp { h, s, a, p, r, d1 })
    }

    /// Random instance with categorical rewards on {0, 1/H}, so every
    /// realized return lies in [0, 1].
    pub fn random<R: Rng + ?Sized>(h: usize, s: usize, a: usize, rng: &mut R) -> Self {
        let support = vec![Outcome::reward(0.0), Outcome::reward(1.0 / h as f64)];
        let p = (0..h)
            .map(|_| {
                (0..s)
                    .map(|_| {
                        (0..a)
                            .map(|_| {
                                let mut row: Vec<f64> = (0..s).map(|_| rng.random::<f64>() + 1e-3).collect();
                                normalize(&mut row);
                                row
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let r = (0..h)
            .map(|_| {
                (0..s)
                    .map(|_| {
                        (0..a)
                            .map(|_| {
                                let q: f64 = rng.random();
                                OutcomeDist::Categorical { support: support.clone(), probs: vec![1.0 - q, q] }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut d1: Vec<f64> = (0..s).map(|_| rng.random::<f64>() + 1e-3).collect();
        normalize(&mut d1);
        TabularMdp { h, s, a, p, r, d1 }
    }

    pub fn horizon(&self) -> usize {
        self.h
    }

    pub fn num_states(&self) -> usize {
        self.s
    }

    pub fn num_actions(&self) -> usize {
        self.a
    }

    pub fn kernel(&self, h: usize, s: usize, a: usize) -> &[f64] {
        &self.p[h][s][a]
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> &OutcomeDist {
        &self.r[h][s][a]
    }

    pub fn initial(&self) -> &[f64] {
        &self.d1
    }

    pub fn mean_reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.r[h][s][a].mean()
    }

    pub fn set_reward(&mut self, h: usize, s: usize, a: usize, d: OutcomeDist) -> Result<()> {
        d.validate()?;
        self.r[h][s][a] = d;
        Ok(())
    }

    pub fn set_kernel(&mut self, h: usize, s: usize, a: usize, row: Vec<f64>) -> Result<()> {
        if row.len() != self.s {
            return Err(DecError::InvalidParams("kernel row has the wrong length".into()));
        }
        check_simplex(&row, "a transition row")?;
        self.p[h][s][a] = row;
        Ok(())
    }

    pub fn set_initial(&mut self, d1: Vec<f64>) -> Result<()> {
        if d1.len() != self.s {
            return Err(DecError::InvalidParams("d1 has the wrong length".into()));
        }
        check_simplex(&d1, "d1")?;
        self.d1 = d1;
        Ok(())
    }

    pub fn same_shape(&self, other: &TabularMdp) -> bool {
        self.h == other.h && self.s == other.s && self.a == other.a
    }

    /// Kernels and initial distribution mixed with uniform at weight `delta`.
    pub fn floored(&self, delta: f64) -> TabularMdp {
        let u = delta / self.s as f64;
        let mut m = self.clone();
        for row in m.p.iter_mut().flatten().flatten() {
            row.iter_mut().for_each(|x| *x = (1.0 - delta) * *x + u);
            normalize(row);
        }
        m.d1.iter_mut().for_each(|x| *x = (1.0 - delta) * *x + u);
        normalize(&mut m.d1);
        m
    }
}

/// Randomized non-stationary policy `table[h][s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy {
    pub table: Vec<Vec<Vec<f64>>>,
}

impl Policy {
    pub fn deterministic(actions: &[Vec<usize>], num_actions: usize) -> Self {
        Policy { table: actions.iter().map(|layer| layer.iter().map(|&a| unit(num_actions, a)).collect()).collect() }
    }

    pub fn uniform(h: usize, s: usize, a: usize) -> Self {
        Policy { table: vec![vec![vec![1.0 / a as f64; a]; s]; h] }
    }

    pub fn random<R: Rng + ?Sized>(h: usize, s: usize, a: usize, rng: &mut R) -> Self {
        let table = (0..h)
            .map(|_| {
                (0..s)
                    .map(|_| {
                        let mut row: Vec<f64> = (0..a).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                        normalize(&mut row);
                        row
                    })
                    .collect()
            })
            .collect();
        Policy { table }
    }

    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        self.table[h][s][a]
    }

    fn check(&self, m: &TabularMdp) -> Result<()> {
        if self.table.len() != m.h || self.table.iter().any(|l| l.len() != m.s || l.iter().any(|r| r.len() != m.a)) {
            return Err(DecError::InvalidParams("policy shape does not match the MDP".into()));
        }
        Ok(())
    }

    /// Entrywise equality within `tol`.
    pub fn approx_eq(&self, other: &Policy, tol: f64) -> bool {
        self.table
            .iter()
            .flatten()
            .flatten()
            .zip(other.table.iter().flatten().flatten())
            .all(|(x, y)| (x - y).abs() <= tol)
    }

    /// All deterministic policies, or None when there are more than `cap`.
    pub fn enumerate_deterministic(h: usize, s: usize, a: usize, cap: usize) -> Option<Vec<Policy>> {
        let slots = h * s;
        let count = (a as f64).powi(slots as i32);
        if count > cap as f64 {
            return None;
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut digits = vec![0usize; slots];
        loop {
            let actions: Vec<Vec<usize>> = digits.chunks(s).map(|c| c.to_vec()).collect();
            out.push(Policy::deterministic(&actions, a));
            let mut i = 0;
            loop {
                if i == slots {
                    return Some(out);
                }
                digits[i] += 1;
                if digits[i] < a {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }
}

/// Per-layer state-action visitation probabilities `d[h][s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupancyMeasure {
    pub d: Vec<Vec<Vec<f64>>>,
}

impl OccupancyMeasure {
    pub fn state_marginal(&self, h: usize) -> Vec<f64> {
        self.d[h].iter().map(|row| row.iter().sum()).collect()
    }

    /// Largest violation of the initial-distribution and flow constraints.
    pub fn flow_residual(&self, m: &TabularMdp) -> f64 {
        let mut worst = 0.0f64;
        for (s, &d) in m.d1.iter().enumerate() {
            worst = worst.max((self.d[0][s].iter().sum::<f64>() - d).abs());
        }
        for h in 0..m.h.saturating_sub(1) {
            let inflow = push_forward(m, h, &self.d[h]);
            for (s2, v) in inflow.iter().enumerate() {
                worst = worst.max((v - self.d[h + 1][s2].iter().sum::<f64>()).abs());
            }
        }
        worst
    }

    pub fn dot_rewards(&self, m: &TabularMdp) -> f64 {
        let mut total = 0.0;
        for h in 0..m.h {
            for s in 0..m.s {
                for a in 0..m.a {
                    total += self.d[h][s][a] * m.mean_reward(h, s, a);
                }
            }
        }
        total
    }
}

fn push_forward(m: &TabularMdp, h: usize, d: &[Vec<f64>]) -> Vec<f64> {
    let mut next = vec![0.0; m.s];
    for s in 0..m.s {
        for a in 0..m.a {
            let w = d[s][a];
            if w != 0.0 {
                for (s2, pr) in m.p[h][s][a].iter().enumerate() {
                    next[s2] += w * pr;
                }
            }
        }
    }
    next
}

pub fn occupancy(m: &TabularMdp, pi: &Policy) -> Result<OccupancyMeasure> {
    pi.check(m)?;
    let mut d = Vec::with_capacity(m.h);
    let mut states = m.d1.clone();
    for h in 0..m.h {
        let layer: Vec<Vec<f64>> = (0..m.s).map(|s| (0..m.a).map(|a| states[s] * pi.table[h][s][a]).collect()).collect();
        if h + 1 < m.h {
            states = push_forward(m, h, &layer);
        }
        d.push(layer);
    }
    Ok(OccupancyMeasure { d })
}

/// Expected return of `pi` in `m`.
pub fn policy_value(m: &TabularMdp, pi: &Policy) -> Result<f64> {
    Ok(occupancy(m, pi)?.dot_rewards(m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Planning {
    /// `q[h][s][a]`.
    pub q: Vec<Vec<Vec<f64>>>,
    /// `v[h][s]` for `h = 0..=H`, with `v[H] = 0`.
    pub v: Vec<Vec<f64>>,
    /// Greedy action per layer and state, least index on ties.
    pub actions: Vec<Vec<usize>>,
    pub policy: Policy,
    pub value: f64,
}

/// Backward induction on mean rewards.
pub fn value_iteration(m: &TabularMdp) -> Planning {
    let mut v = vec![vec![0.0; m.s]; m.h + 1];
    let mut q = vec![vec![vec![0.0; m.a]; m.s]; m.h];
    let mut actions = vec![vec![0usize; m.s]; m.h];
    for h in (0..m.h).rev() {
        for s in 0..m.s {
            for a in 0..m.a {
                let cont: f64 = if h + 1 < m.h { m.p[h][s][a].iter().zip(&v[h + 1]).map(|(p, x)| p * x).sum() } else { 0.0 };
                q[h][s][a] = m.mean_reward(h, s, a) + cont;
            }
            let (best, val) = crate::models::argmax(&q[h][s]);
            actions[h][s] = best;
            v[h][s] = val;
        }
    }
    let value = m.d1.iter().zip(&v[0]).map(|(d, x)| d * x).sum();
    let policy = Policy::deterministic(&actions, m.a);
    Planning { q, v, actions, policy, value }
}

/// Q-function and value of a fixed policy.
pub fn policy_evaluation(m: &TabularMdp, pi: &Policy) -> Result<(Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>)> {
    pi.check(m)?;
    let mut v = vec![vec![0.0; m.s]; m.h + 1];
    let mut q = vec![vec![vec![0.0; m.a]; m.s]; m.h];
    for h in (0..m.h).rev() {
        for s in 0..m.s {
            for a in 0..m.a {
                let cont: f64 = if h + 1 < m.h { m.p[h][s][a].iter().zip(&v[h + 1]).map(|(p, x)| p * x).sum() } else { 0.0 };
                q[h][s][a] = m.mean_reward(h, s, a) + cont;
            }
            v[h][s] = q[h][s].iter().zip(&pi.table[h][s]).map(|(x, p)| x * p).sum();
        }
    }
    Ok((q, v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub s: usize,
    pub a: usize,
    pub r: f64,
}

fn draw<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
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

/// One episode under `pi`.
pub fn simulate<R: Rng + ?Sized>(m: &TabularMdp, pi: &Policy, rng: &mut R) -> Result<Vec<Step>> {
    pi.check(m)?;
    let mut s = draw(&m.d1, rng);
    let mut out = Vec::with_capacity(m.h);
    for h in 0..m.h {
        let a = draw(&pi.table[h][s], rng);
        let r = m.r[h][s][a].sample(rng).reward;
        out.push(Step { s, a, r });
        if h + 1 < m.h {
            s = draw(&m.p[h][s][a], rng);
        }
    }
    Ok(out)
}

/// Squared Hellinger distance between the trajectory laws of `pi` in two
/// MDPs, computed exactly through the Bhattacharyya coefficient.
pub fn trajectory_hellinger(m: &TabularMdp, reference: &TabularMdp, pi: &Policy) -> Result<f64> {
    if !m.same_shape(reference) {
        return Err(DecError::InvalidParams("MDPs have different shapes".into()));
    }
    pi.check(m)?;
    let mut alpha: Vec<f64> = m.d1.iter().zip(&reference.d1).map(|(x, y)| (x * y).sqrt()).collect();
    let mut bc = 0.0;
    for h in 0..m.h {
        let mut next = vec![0.0; m.s];
        for s in 0..m.s {
            if alpha[s] == 0.0 {
                continue;
            }
            for a in 0..m.a {
                let w = pi.table[h][s][a];
                if w == 0.0 {
                    continue;
                }
                let beta = alpha[s] * w * affinity(&m.r[h][s][a], &reference.r[h][s][a])?;
                if h + 1 == m.h {
                    bc += beta;
                } else {
                    for s2 in 0..m.s {
                        next[s2] += beta * (m.p[h][s][a][s2] * reference.p[h][s][a][s2]).sqrt();
                    }
                }
            }
        }
        alpha = next;
    }
    Ok((2.0 * (1.0 - bc)).clamp(0.0, 2.0))
}

/// `(|f_M(pi) - f_ref(pi)|, rhs)` where rhs sums, along the reference
/// occupancy of `pi`, the total variation between the transition rows and
/// between the reward laws, plus the total variation between the initial
/// distributions.
pub fn simulation_gap(m: &TabularMdp, reference: &TabularMdp, pi: &Policy) -> Result<(f64, f64)> {
    if !m.same_shape(reference) {
        return Err(DecError::InvalidParams("MDPs have different shapes".into()));
    }
    let lhs = (policy_value(m, pi)? - policy_value(reference, pi)?).abs();
    let occ = occupancy(reference, pi)?;
    let mut rhs = 0.5 * m.d1.iter().zip(&reference.d1).map(|(x, y)| (x - y).abs()).sum::<f64>();
    for h in 0..m.h {
        for s in 0..m.s {
            for a in 0..m.a {
                let w = occ.d[h][s][a];
                if w == 0.0 {
                    continue;
                }
                let tv_r = divergence(DivergenceKind::TV, &m.r[h][s][a], &reference.r[h][s][a])?;
                let tv_p = if h + 1 < m.h {
                    0.5 * m.p[h][s][a].iter().zip(&reference.p[h][s][a]).map(|(x, y)| (x - y).abs()).sum::<f64>()
                } else {
                    0.0
                };
                rhs += w * (tv_r + tv_p);
            }
        }
    }
    Ok((lhs, rhs))
}

/// Normalizes each row of an occupancy measure; unvisited states get the uniform row.
pub fn policy_from_occupancy(d: &OccupancyMeasure) -> Policy {
    let table = d
        .d
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|row| {
                    let mass: f64 = row.iter().sum();
                    if mass > 1e-12 {
                        row.iter().map(|x| x.max(0.0) / mass).collect()
                    } else {
                        vec![1.0 / row.len() as f64; row.len()]
                    }
                })
                .collect()
        })
        .collect();
    Policy { table }
}

/// A policy maximizing `d_h(s,a) / (2HSA + eta * gap)` under `reference`.
#[derive(Debug, Clone, PartialEq)]
pub struct LfpSolution {
    pub policy: Policy,
    pub ratio: f64,
    pub occupancy: OccupancyMeasure,
}

/// Solves the linear-fractional program for the target triple via its
/// Charnes-Cooper linear program.
pub fn lfp_policy(reference: &TabularMdp, target: (usize, usize, usize), eta: f64) -> Result<LfpSolution> {
    let (th, ts, ta) = target;
    if th >= reference.h || ts >= reference.s || ta >= reference.a {
        return Err(DecError::InvalidParams(format!("target {target:?} out of range")));
    }
    if !(eta > 0.0) {
        return Err(DecError::InvalidParams(format!("eta must be positive, got {eta}")));
    }
    let (h, s, a) = (reference.h, reference.s, reference.a);
    let n = h * s * a;
    let idx = |hh: usize, ss: usize, aa: usize| (hh * s + ss) * a + aa;
    let t = n;
    let fstar = value_iteration(reference).value;
    let base = 2.0 * n as f64;

    let mut obj = vec![0.0; n + 1];
    obj[idx(th, ts, ta)] = 1.0;
    let mut lp = LinearProgram::maximize(obj);

    let mut row = vec![0.0; n + 1];
    for hh in 0..h {
        for ss in 0..s {
            for aa in 0..a {
                row[idx(hh, ss, aa)] = -eta * reference.mean_reward(hh, ss, aa);
            }
        }
    }
    row[t] = base + eta * fstar;
    lp.add_row(row, Cmp::Eq, 1.0);

    for ss in 0..s {
        let mut terms: Vec<(usize, f64)> = (0..a).map(|aa| (idx(0, ss, aa), 1.0)).collect();
        terms.push((t, -reference.d1[ss]));
        lp.add_sparse_row(&terms, Cmp::Eq, 0.0);
    }
    for hh in 0..h.saturating_sub(1) {
        for s2 in 0..s {
            let mut terms = Vec::with_capacity(s * a + a);
            for ss in 0..s {
                for aa in 0..a {
                    let pr = reference.p[hh][ss][aa][s2];
                    if pr != 0.0 {
                        terms.push((idx(hh, ss, aa), pr));
                    }
                }
            }
            for aa in 0..a {
                terms.push((idx(hh + 1, s2, aa), -1.0));
            }
            lp.add_sparse_row(&terms, Cmp::Eq, 0.0);
        }
    }
    for j in 0..=n {
        lp.add_sparse_row(&[(j, 1.0)], Cmp::Le, 1.0);
    }

    let sol = lp.solve()?;
    let tval = sol.x[t];
    if !(tval > 0.0) {
        return Err(DecError::NumericFailure("Charnes-Cooper scale variable vanished".into()));
    }
    let d = OccupancyMeasure {
        d: (0..h)
            .map(|hh| (0..s).map(|ss| (0..a).map(|aa| sol.x[idx(hh, ss, aa)].max(0.0) / tval).collect()).collect())
            .collect(),
    };
    let policy = policy_from_occupancy(&d);
    let occ = occupancy(reference, &policy)?;
    let gap = (fstar - occ.dot_rewards(reference)).max(0.0);
    let ratio = occ.d[th][ts][ta] / (base + eta * gap);
    Ok(LfpSolution { policy, ratio, occupancy: occ })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcIgw {
    /// Distinct cover policies; the greedy policy of the reference is included.
    pub policies: Vec<Policy>,
    pub weights: Vec<f64>,
    pub gaps: Vec<f64>,
    pub lambda: f64,
    pub eta: f64,
    /// Index of the reference's greedy policy in `policies`.
    pub greedy: usize,
    /// The model the cover was computed for (floored when requested).
    pub reference: TabularMdp,
}

/// Inverse-gap-weighted policy cover of `reference`.
///
/// With `floor = Some(delta)` the kernels and initial distribution are first
/// mixed with uniform at weight delta.
pub fn pcigw(reference: &TabularMdp, eta: f64, floor: Option<f64>) -> Result<PcIgw> {
    let model = match floor {
        Some(delta) => {
            if !(0.0..1.0).contains(&delta) {
                return Err(DecError::InvalidParams(format!("floor {delta} outside [0,1)")));
            }
            reference.floored(delta)
        }
        None => reference.clone(),
    };
    let (h, s, a) = (model.h, model.s, model.a);
    let plan = value_iteration(&model);
    let mut policies = vec![plan.policy.clone()];
    for hh in 0..h {
        for ss in 0..s {
            for aa in 0..a {
                let sol = lfp_policy(&model, (hh, ss, aa), eta)?;
                if !policies.iter().any(|p| p.approx_eq(&sol.policy, 1e-9)) {
                    policies.push(sol.policy);
                }
            }
        }
    }
    let gaps: Vec<f64> = policies
        .iter()
        .map(|p| policy_value(&model, p).map(|v| (plan.value - v).max(0.0)))
        .collect::<Result<_>>()?;
    let scaled: Vec<f64> = gaps.iter().map(|g| eta * g).collect();
    let lambda = bisect_normalizer(&scaled, 1.0, 2.0 * (h * s * a) as f64);
    let mut weights: Vec<f64> = scaled.iter().map(|g| 1.0 / (lambda + g)).collect();
    normalize(&mut weights);
    Ok(PcIgw { policies, weights, gaps, lambda, eta, greedy: 0, reference: model })
}

/// `E_{pi~p}[f_M(pi_M) - f_M(pi) - gamma * D_H^2(M(pi), ref(pi))]` for a
/// distribution over policies.
pub fn mixed_policy_objective(
    m: &TabularMdp,
    reference: &TabularMdp,
    policies: &[Policy],
    weights: &[f64],
    gamma: f64,
) -> Result<f64> {
    let best = value_iteration(m).value;
    let mut total = 0.0;
    for (pi, &w) in policies.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let regret = best - policy_value(m, pi)?;
        total += w * (regret - gamma * trajectory_hellinger(m, reference, pi)?);
    }
    Ok(total)
}
