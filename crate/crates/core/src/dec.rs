//! DEC values on finite classes (primal and dual LPs) and closed-form certificates.

use serde::{Deserialize, Serialize};

use crate::error::{DecError, Result};
use crate::lp::{Cmp, LinearProgram};
use crate::models::{Model, ModelClass};
use crate::probkit::DivergenceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateMethod {
    LP,
    DualLP,
    IGW,
    PosteriorSampling,
    PCIGW,
    PCIGWBilinear,
}

/// An upper bound on the DEC together with the decision distribution achieving it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecCertificate {
    pub gamma: f64,
    pub divergence: DivergenceKind,
    pub value: f64,
    pub witness: Vec<f64>,
    pub method: CertificateMethod,
}

/// A prior over the class and the value it guarantees in the dual game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecLowerWitness {
    pub prior: Vec<f64>,
    pub value: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(DecError::InvalidParams(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

/// `costs[m][pi] = gap of model m at pi - gamma * E_nu D(M(pi), Mbar(pi))`.
pub fn cost_matrix_randomized(
    class: &ModelClass,
    estimators: &[Model],
    nu: &[f64],
    gamma: f64,
    div: DivergenceKind,
) -> Result<Vec<Vec<f64>>> {
    if estimators.len() != nu.len() {
        return Err(DecError::WeightDim { expected: estimators.len(), got: nu.len() });
    }
    let a = class.num_decisions();
    for e in estimators {
        if e.num_decisions() != a {
            return Err(DecError::DecisionCountMismatch { expected: a, got: e.num_decisions() });
        }
    }
    class
        .models()
        .iter()
        .map(|m| {
            (0..a)
                .map(|pi| {
                    let mut d = 0.0;
                    for (e, &w) in estimators.iter().zip(nu) {
                        if w > 0.0 {
                            d += w * m.divergence_at(div, e, pi)?;
                        }
                    }
                    if !d.is_finite() {
                        return Err(DecError::UnsupportedDivergence(div.to_string()));
                    }
                    Ok(m.gap(pi) - gamma * d)
                })
                .collect()
        })
        .collect()
}

pub fn cost_matrix(class: &ModelClass, reference: &Model, gamma: f64, div: DivergenceKind) -> Result<Vec<Vec<f64>>> {
    cost_matrix_randomized(class, std::slice::from_ref(reference), &[1.0], gamma, div)
}

/// Objective of the decision distribution `p` against every model.
pub fn evaluate_witness(costs: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    costs.iter().map(|c| c.iter().zip(p).map(|(a, b)| a * b).sum()).collect()
}

fn clean_simplex(x: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    clipped.iter().map(|v| v / s).collect()
}

/// `min_p max_m <costs[m], p>` over the simplex; returns (value, p).
pub fn solve_primal(costs: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let a = costs[0].len();
    let mut obj = vec![0.0; a + 1];
    obj[a] = 1.0;
    let mut lp = LinearProgram::minimize(obj);
    lp.set_free(a);
    for c in costs {
        let mut row = c.clone();
        row.push(-1.0);
        lp.add_row(row, Cmp::Le, 0.0);
    }
    let mut simplex = vec![1.0; a];
    simplex.push(0.0);
    lp.add_row(simplex, Cmp::Eq, 1.0);
    let sol = lp.solve()?;
    let p = clean_simplex(&sol.x[..a]);
    let value = evaluate_witness(costs, &p).into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok((value, p))
}

/// `max_mu min_pi sum_m mu_m costs[m][pi]`; returns (value, mu).
pub fn solve_dual(costs: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let n = costs.len();
    let a = costs[0].len();
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LinearProgram::maximize(obj);
    lp.set_free(n);
    for pi in 0..a {
        let mut row: Vec<f64> = costs.iter().map(|c| -c[pi]).collect();
        row.push(1.0);
        lp.add_row(row, Cmp::Le, 0.0);
    }
    let mut simplex = vec![1.0; n];
    simplex.push(0.0);
    lp.add_row(simplex, Cmp::Eq, 1.0);
    let sol = lp.solve()?;
    let mu = clean_simplex(&sol.x[..n]);
    let value = (0..a)
        .map(|pi| costs.iter().zip(&mu).map(|(c, w)| w * c[pi]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok((value, mu))
}

/// Exact DEC of a finite class against a reference model.
pub fn dec_lp(class: &ModelClass, reference: &Model, gamma: f64, div: DivergenceKind) -> Result<DecCertificate> {
    check_gamma(gamma)?;
    let costs = cost_matrix(class, reference, gamma, div)?;
    let (value, witness) = solve_primal(&costs)?;
    Ok(DecCertificate { gamma, divergence: div, value, witness, method: CertificateMethod::LP })
}

/// Best prior in the dual game; its value matches `dec_lp` on finite classes.
pub fn dec_dual_lp(class: &ModelClass, reference: &Model, gamma: f64, div: DivergenceKind) -> Result<DecLowerWitness> {
    check_gamma(gamma)?;
    let costs = cost_matrix(class, reference, gamma, div)?;
    let (value, prior) = solve_dual(&costs)?;
    Ok(DecLowerWitness { prior, value })
}

/// DEC with the divergence averaged over a randomized estimator `nu`.
pub fn dec_randomized(
    class: &ModelClass,
    estimators: &[Model],
    nu: &[f64],
    gamma: f64,
    div: DivergenceKind,
) -> Result<DecCertificate> {
    check_gamma(gamma)?;
    let costs = cost_matrix_randomized(class, estimators, nu, gamma, div)?;
    let (value, witness) = solve_primal(&costs)?;
    Ok(DecCertificate { gamma, divergence: div, value, witness, method: CertificateMethod::LP })
}

/// Inverse gap weights `1/(lambda + 2 gamma gap)` and the normalizer lambda.
pub fn igw_weights(fbar: &[f64], gamma: f64) -> Result<(Vec<f64>, f64)> {
    check_gamma(gamma)?;
    if fbar.is_empty() {
        return Err(DecError::InvalidParams("empty mean vector".into()));
    }
    let best = fbar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = fbar.iter().map(|f| 2.0 * gamma * (best - f)).collect();
    let lambda = bisect_normalizer(&scaled, 1.0, fbar.len() as f64);
    let p: Vec<f64> = scaled.iter().map(|g| 1.0 / (lambda + g)).collect();
    Ok((clean_simplex(&p), lambda))
}

/// Root of `sum_i 1/(lambda + g_i) = 1` in `[lo, hi]`.
pub(crate) fn bisect_normalizer(g: &[f64], lo: f64, hi: f64) -> f64 {
    bisect_decreasing(|l| g.iter().map(|gi| 1.0 / (l + gi)).sum::<f64>() - 1.0, lo, hi)
}

/// Root of a decreasing function on `[lo, hi]`, clamped to the bracket.
pub(crate) fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    if f(lo) <= 0.0 {
        return lo;
    }
    if f(hi) >= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse gap weighting certificate: value A/gamma under the squared-mean divergence.
pub fn igw(fbar: &[f64], gamma: f64) -> Result<DecCertificate> {
    let (witness, _) = igw_weights(fbar, gamma)?;
    Ok(DecCertificate {
        gamma,
        divergence: DivergenceKind::SquaredMean,
        value: fbar.len() as f64 / gamma,
        witness,
        method: CertificateMethod::IGW,
    })
}

/// Plays the pushforward of the optimal-decision map under `prior`.
///
/// The value is the prior-averaged objective, i.e. a dual-game value; it
/// bounds the objective of the witness in expectation over the prior, not
/// against each model separately.
pub fn posterior_sampling_certificate(
    class: &ModelClass,
    prior: &[f64],
    reference: &Model,
    gamma: f64,
    div: DivergenceKind,
) -> Result<DecCertificate> {
    check_gamma(gamma)?;
    if prior.len() != class.len() {
        return Err(DecError::WeightDim { expected: class.len(), got: prior.len() });
    }
    let mut p = vec![0.0; class.num_decisions()];
    for (m, &w) in class.models().iter().zip(prior) {
        p[m.best_decision().0] += w;
    }
    let costs = cost_matrix(class, reference, gamma, div)?;
    let per_model = evaluate_witness(&costs, &p);
    let value = per_model.iter().zip(prior).map(|(v, w)| v * w).sum();
    Ok(DecCertificate { gamma, divergence: div, value, witness: p, method: CertificateMethod::PosteriorSampling })
}
