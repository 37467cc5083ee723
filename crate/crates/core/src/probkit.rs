//! Outcome distributions over (reward, observation) pairs and their divergences.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{DecError, Result};

const PROB_TOL: f64 = 1e-12;

/// One atom of a categorical outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs: Option<u32>,
}

impl Outcome {
    pub fn reward(reward: f64) -> Self {
        Outcome { reward, obs: None }
    }
}

/// A realized draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub reward: f64,
    pub obs: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawDist {
    Bernoulli { mu: f64 },
    Rademacher { mu: f64 },
    Gaussian { mu: f64, sigma2: f64 },
    Categorical { support: Vec<Outcome>, probs: Vec<f64> },
    PointMass { reward: f64 },
}

/// Reward/observation law of a single decision.
///
/// Bernoulli rewards live on {0, 1}; Rademacher rewards on {-1, +1} with the
/// given mean. Constructors validate parameters, and so does deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDist", into = "RawDist")]
pub enum OutcomeDist {
    Bernoulli(f64),
    Rademacher(f64),
    Gaussian { mu: f64, sigma2: f64 },
    Categorical { support: Vec<Outcome>, probs: Vec<f64> },
    PointMass(f64),
}

impl TryFrom<RawDist> for OutcomeDist {
    type Error = DecError;
    fn try_from(raw: RawDist) -> Result<Self> {
        let d = match raw {
            RawDist::Bernoulli { mu } => OutcomeDist::Bernoulli(mu),
            RawDist::Rademacher { mu } => OutcomeDist::Rademacher(mu),
            RawDist::Gaussian { mu, sigma2 } => OutcomeDist::Gaussian { mu, sigma2 },
            RawDist::Categorical { support, probs } => OutcomeDist::Categorical { support, probs },
            RawDist::PointMass { reward } => OutcomeDist::PointMass(reward),
        };
        d.validate()?;
        Ok(d)
    }
}

impl From<OutcomeDist> for RawDist {
    fn from(d: OutcomeDist) -> Self {
        match d {
            OutcomeDist::Bernoulli(mu) => RawDist::Bernoulli { mu },
            OutcomeDist::Rademacher(mu) => RawDist::Rademacher { mu },
            OutcomeDist::Gaussian { mu, sigma2 } => RawDist::Gaussian { mu, sigma2 },
            OutcomeDist::Categorical { support, probs } => RawDist::Categorical { support, probs },
            OutcomeDist::PointMass(reward) => RawDist::PointMass { reward },
        }
    }
}

impl std::fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DivergenceKind::HellingerSq => "hellinger",
            DivergenceKind::KL => "kl",
            DivergenceKind::TV => "tv",
            DivergenceKind::SquaredMean => "squared",
            DivergenceKind::Bilinear => "bilinear",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    /// Squared Hellinger distance, sum of (sqrt p - sqrt q)^2, valued in [0, 2].
    #[serde(alias = "hellinger")]
    HellingerSq,
    #[serde(rename = "kl")]
    KL,
    #[serde(rename = "tv")]
    TV,
    /// Squared difference of mean rewards.
    #[serde(alias = "squared")]
    SquaredMean,
    /// Only meaningful together with a bilinear embedding.
    Bilinear,
}

impl std::str::FromStr for DivergenceKind {
    type Err = DecError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hellinger" | "hellinger_sq" | "hellingersq" => Ok(DivergenceKind::HellingerSq),
            "kl" => Ok(DivergenceKind::KL),
            "tv" => Ok(DivergenceKind::TV),
            "squared" | "squared_mean" | "squaredmean" => Ok(DivergenceKind::SquaredMean),
            "bilinear" => Ok(DivergenceKind::Bilinear),
            other => Err(DecError::InvalidParams(format!("unknown divergence '{other}'"))),
        }
    }
}

fn invalid(msg: impl Into<String>) -> DecError {
    DecError::InvalidDistribution(msg.into())
}

impl OutcomeDist {
    pub fn bernoulli(mu: f64) -> Result<Self> {
        let d = OutcomeDist::Bernoulli(mu);
        d.validate()?;
        Ok(d)
    }

    pub fn rademacher(mu: f64) -> Result<Self> {
        let d = OutcomeDist::Rademacher(mu);
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian(mu: f64, sigma2: f64) -> Result<Self> {
        let d = OutcomeDist::Gaussian { mu, sigma2 };
        d.validate()?;
        Ok(d)
    }

    pub fn categorical(support: Vec<Outcome>, probs: Vec<f64>) -> Result<Self> {
        let d = OutcomeDist::Categorical { support, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn point_mass(reward: f64) -> Self {
        OutcomeDist::PointMass(reward)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            OutcomeDist::Bernoulli(_) => "bernoulli",
            OutcomeDist::Rademacher(_) => "rademacher",
            OutcomeDist::Gaussian { .. } => "gaussian",
            OutcomeDist::Categorical { .. } => "categorical",
            OutcomeDist::PointMass(_) => "point_mass",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OutcomeDist::Bernoulli(mu) => {
                if !(0.0..=1.0).contains(mu) {
                    return Err(invalid(format!("bernoulli mean {mu} outside [0,1]")));
                }
            }
            OutcomeDist::Rademacher(mu) => {
                if !(-1.0..=1.0).contains(mu) {
                    return Err(invalid(format!("rademacher mean {mu} outside [-1,1]")));
                }
            }
            OutcomeDist::Gaussian { mu, sigma2 } => {
                if !mu.is_finite() || !(*sigma2 > 0.0 && sigma2.is_finite()) {
                    return Err(invalid(format!("gaussian parameters ({mu}, {sigma2})")));
                }
            }
            OutcomeDist::Categorical { support, probs } => {
                if support.is_empty() || support.len() != probs.len() {
                    return Err(invalid("categorical support and probs must be nonempty and of equal length"));
                }
                if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                    return Err(invalid("categorical probabilities must be nonnegative"));
                }
                if support.iter().any(|o| !o.reward.is_finite()) {
                    return Err(invalid("categorical rewards must be finite"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(invalid(format!("categorical probabilities sum to {total}")));
                }
            }
            OutcomeDist::PointMass(r) => {
                if !r.is_finite() {
                    return Err(invalid("point mass reward must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            OutcomeDist::Bernoulli(mu) | OutcomeDist::Rademacher(mu) => *mu,
            OutcomeDist::Gaussian { mu, .. } => *mu,
            OutcomeDist::Categorical { support, probs } => {
                support.iter().zip(probs).map(|(o, p)| o.reward * p).sum()
            }
            OutcomeDist::PointMass(r) => *r,
        }
    }

    /// Finite-support view as (outcome, probability) atoms. None for Gaussians.
    pub fn atoms(&self) -> Option<Vec<(Outcome, f64)>> {
        match self {
            OutcomeDist::Bernoulli(mu) => Some(vec![
                (Outcome::reward(1.0), *mu),
                (Outcome::reward(0.0), 1.0 - mu),
            ]),
            OutcomeDist::Rademacher(mu) => Some(vec![
                (Outcome::reward(1.0), (1.0 + mu) / 2.0),
                (Outcome::reward(-1.0), (1.0 - mu) / 2.0),
            ]),
            OutcomeDist::Gaussian { .. } => None,
            OutcomeDist::Categorical { support, probs } => {
                Some(support.iter().copied().zip(probs.iter().copied()).collect())
            }
            OutcomeDist::PointMass(r) => Some(vec![(Outcome::reward(*r), 1.0)]),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        match self {
            OutcomeDist::Bernoulli(mu) => {
                let r = if rng.random::<f64>() < *mu { 1.0 } else { 0.0 };
                Sample { reward: r, obs: None }
            }
            OutcomeDist::Rademacher(mu) => {
                let r = if rng.random::<f64>() < (1.0 + mu) / 2.0 { 1.0 } else { -1.0 };
                Sample { reward: r, obs: None }
            }
            OutcomeDist::Gaussian { mu, sigma2 } => {
                let normal = Normal::new(*mu, sigma2.sqrt()).expect("validated gaussian");
                Sample { reward: normal.sample(rng), obs: None }
            }
            OutcomeDist::Categorical { support, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = support.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                // Skip trailing zero-mass atoms that rounding could land on.
                while probs[chosen] == 0.0 && chosen > 0 {
                    chosen -= 1;
                }
                Sample { reward: support[chosen].reward, obs: support[chosen].obs }
            }
            OutcomeDist::PointMass(r) => Sample { reward: *r, obs: None },
        }
    }

    /// Probability mass of the draw (density for Gaussians).
    pub fn likelihood(&self, x: &Sample) -> f64 {
        match self {
            OutcomeDist::Gaussian { mu, sigma2 } => {
                let z = x.reward - mu;
                (-(z * z) / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt()
            }
            _ => self
                .atoms()
                .expect("finite support")
                .iter()
                .filter(|(o, _)| o.reward == x.reward && o.obs == x.obs)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    pub fn log_likelihood(&self, x: &Sample) -> f64 {
        match self {
            OutcomeDist::Gaussian { mu, sigma2 } => {
                let z = x.reward - mu;
                -(z * z) / (2.0 * sigma2) - 0.5 * (2.0 * std::f64::consts::PI * sigma2).ln()
            }
            _ => self.likelihood(x).ln(),
        }
    }
}

fn two_point(p: f64, q: f64) -> ([f64; 2], [f64; 2]) {
    ([p, 1.0 - p], [q, 1.0 - q])
}

fn hellinger_sq_probs(p: &[f64], q: &[f64]) -> f64 {
    let h: f64 = p.iter().zip(q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    h.clamp(0.0, 2.0)
}

fn kl_probs(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).ln();
        }
    }
    total.max(0.0)
}

fn tv_probs(p: &[f64], q: &[f64]) -> f64 {
    let t: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    t.clamp(0.0, 1.0)
}

fn prob_divergence(kind: DivergenceKind, p: &[f64], q: &[f64]) -> f64 {
    match kind {
        DivergenceKind::HellingerSq => hellinger_sq_probs(p, q),
        DivergenceKind::KL => kl_probs(p, q),
        DivergenceKind::TV => tv_probs(p, q),
        DivergenceKind::SquaredMean | DivergenceKind::Bilinear => unreachable!(),
    }
}

/// Closed-form divergence between two outcome distributions of the same kind.
///
/// `SquaredMean` accepts any pair. Categorical pairs must share the same
/// support list; atoms are matched by position.
pub fn divergence(kind: DivergenceKind, p: &OutcomeDist, q: &OutcomeDist) -> Result<f64> {
    use OutcomeDist::*;
    match kind {
        DivergenceKind::SquaredMean => return Ok((p.mean() - q.mean()).powi(2)),
        DivergenceKind::Bilinear => {
            return Err(DecError::InvalidParams(
                "bilinear divergence needs an embedding".into(),
            ))
        }
        _ => {}
    }
    match (p, q) {
        (Bernoulli(a), Bernoulli(b)) => {
            let (pp, qq) = two_point(*a, *b);
            Ok(prob_divergence(kind, &pp, &qq))
        }
        (Rademacher(a), Rademacher(b)) => {
            let (pp, qq) = two_point((1.0 + a) / 2.0, (1.0 + b) / 2.0);
            Ok(prob_divergence(kind, &pp, &qq))
        }
        (Gaussian { mu: m1, sigma2: s1 }, Gaussian { mu: m2, sigma2: s2 }) => {
            gaussian_divergence(kind, *m1, *s1, *m2, *s2)
        }
        (Categorical { support: sp, probs: pp }, Categorical { support: sq, probs: qq }) => {
            if sp.len() != sq.len() || sp.iter().zip(sq).any(|(a, b)| a != b) {
                return Err(DecError::UnsupportedPair("categorical", "categorical on a different support"));
            }
            Ok(prob_divergence(kind, pp, qq))
        }
        (PointMass(a), PointMass(b)) => {
            if a == b {
                Ok(0.0)
            } else {
                Ok(match kind {
                    DivergenceKind::HellingerSq => 2.0,
                    DivergenceKind::TV => 1.0,
                    _ => f64::INFINITY,
                })
            }
        }
        _ => Err(DecError::UnsupportedPair(p.kind_name(), q.kind_name())),
    }
}

fn gaussian_divergence(kind: DivergenceKind, m1: f64, s1: f64, m2: f64, s2: f64) -> Result<f64> {
    let delta = m1 - m2;
    match kind {
        DivergenceKind::HellingerSq => {
            let coef = (2.0 * (s1 * s2).sqrt() / (s1 + s2)).sqrt();
            let bc = coef * (-(delta * delta) / (4.0 * (s1 + s2))).exp();
            Ok((2.0 * (1.0 - bc)).clamp(0.0, 2.0))
        }
        DivergenceKind::KL => Ok(0.5 * (s2 / s1).ln() + (s1 + delta * delta) / (2.0 * s2) - 0.5),
        DivergenceKind::TV => {
            if s1 != s2 {
                return Err(DecError::UnsupportedPair("gaussian", "gaussian of a different variance"));
            }
            Ok(erf(delta.abs() / (2.0 * (2.0 * s1).sqrt())))
        }
        DivergenceKind::SquaredMean | DivergenceKind::Bilinear => unreachable!(),
    }
}

/// Bhattacharyya coefficient, the affinity sum of sqrt(p q), equal to 1 - D_H^2 / 2.
pub fn affinity(p: &OutcomeDist, q: &OutcomeDist) -> Result<f64> {
    Ok(1.0 - divergence(DivergenceKind::HellingerSq, p, q)? / 2.0)
}
