//! Bilinear embeddings of finite classes, barycentric spanners for the
//! gap-reweighted factors, and the inverse-gap-weighted design built on them.

use nalgebra::{DMatrix, DVector};

use crate::dec::bisect_decreasing;
use crate::error::{DecError, Result};
use crate::mdp::{occupancy, value_iteration, TabularMdp};
use crate::models::{Model, ModelClass};

const NORM_TOL: f64 = 1e-9;
const RANK_CUTOFF: f64 = 1e-10;
const SWAP_SLACK: f64 = 1e-12;

/// Factorization `<X_h(M), W_h(M')>` of a finite class relative to one
/// reference member, together with the reward functional of the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearEmbedding {
    dim: usize,
    horizon: usize,
    reference: usize,
    /// `x[m][h]`, each of length `dim`.
    x: Vec<Vec<Vec<f64>>>,
    w: Vec<Vec<Vec<f64>>>,
    /// `theta_ref[h]`; the reference's value of model m's policy is `sum_h <x[m][h], theta_ref[h]>`.
    theta_ref: Vec<Vec<f64>>,
    discrepancy_bound: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl BilinearEmbedding {
    pub fn new(
        x: Vec<Vec<Vec<f64>>>,
        w: Vec<Vec<Vec<f64>>>,
        theta_ref: Vec<Vec<f64>>,
        reference: usize,
        discrepancy_bound: f64,
    ) -> Result<Self> {
        let bad = |m: &str| Err(DecError::InvalidEmbedding(m.to_string()));
        if x.is_empty() || x.len() != w.len() {
            return bad("X and W must list the same nonempty set of models");
        }
        if reference >= x.len() {
            return Err(DecError::IndexOutOfRange { index: reference, len: x.len() });
        }
        let horizon = theta_ref.len();
        let dim = theta_ref.first().map_or(0, Vec::len);
        if horizon == 0 || dim == 0 {
            return bad("theta_ref must have at least one nonempty layer");
        }
        for layers in x.iter().chain(&w) {
            if layers.len() != horizon || layers.iter().any(|v| v.len() != dim) {
                return bad("factor shapes are inconsistent");
            }
        }
        if theta_ref.iter().any(|v| v.len() != dim) {
            return bad("theta_ref shapes are inconsistent");
        }
        if x.iter().flatten().any(|v| norm(v) > 1.0 + NORM_TOL) {
            return bad("every X_h must have Euclidean norm at most 1");
        }
        if w[reference].iter().flatten().any(|v| v.abs() > 1e-12) {
            return bad("W must vanish at the reference");
        }
        if !(discrepancy_bound >= 1.0) {
            return bad("the discrepancy bound must be at least 1");
        }
        let emb = BilinearEmbedding { dim, horizon, reference, x, w, theta_ref, discrepancy_bound };
        let top = emb.reference_value(reference);
        if (0..emb.len()).any(|m| emb.reference_value(m) > top + 1e-9) {
            return bad("the reference's own policy must be optimal for the reference");
        }
        Ok(emb)
    }

    /// Single-layer embedding of raw vectors with zero gaps, zero W, and model 0 as reference.
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let d = vectors.first().map_or(0, Vec::len);
        let n = vectors.len();
        let x = vectors.into_iter().map(|v| vec![v]).collect();
        BilinearEmbedding::new(x, vec![vec![vec![0.0; d]]; n], vec![vec![0.0; d]], 0, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn discrepancy_bound(&self) -> f64 {
        self.discrepancy_bound
    }

    pub fn x(&self, m: usize, h: usize) -> &[f64] {
        &self.x[m][h]
    }

    pub fn w(&self, m: usize, h: usize) -> &[f64] {
        &self.w[m][h]
    }

    pub fn theta_ref(&self) -> &[Vec<f64>] {
        &self.theta_ref
    }

    pub fn bilinear_form(&self, m: usize, other: usize, h: usize) -> f64 {
        dot(&self.x[m][h], &self.w[other][h])
    }

    /// Value under the reference of model m's policy.
    pub fn reference_value(&self, m: usize) -> f64 {
        self.x[m].iter().zip(&self.theta_ref).map(|(x, t)| dot(x, t)).sum()
    }

    pub fn gaps(&self) -> Vec<f64> {
        let top = self.reference_value(self.reference);
        (0..self.len()).map(|m| (top - self.reference_value(m)).max(0.0)).collect()
    }

    /// `X_h(M) / sqrt(1 + eta * gap(M))` for every model.
    pub fn reweighted(&self, h: usize, eta: f64) -> Vec<Vec<f64>> {
        self.gaps()
            .iter()
            .enumerate()
            .map(|(m, g)| {
                let s = (1.0 + eta * g).sqrt();
                self.x[m][h].iter().map(|v| v / s).collect()
            })
            .collect()
    }
}

/// Linear optimization over the class: returns a maximizer of `sum_h <X_h(M), theta[h]>`.
pub trait PlanningOracle {
    fn plan(&self, emb: &BilinearEmbedding, theta: &[Vec<f64>]) -> usize;
}

/// Exhaustive search, least index on ties.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnumerationOracle;

impl PlanningOracle for EnumerationOracle {
    fn plan(&self, emb: &BilinearEmbedding, theta: &[Vec<f64>]) -> usize {
        let scores: Vec<f64> = (0..emb.len())
            .map(|m| emb.x[m].iter().zip(theta).map(|(x, t)| dot(x, t)).sum())
            .collect();
        crate::models::argmax(&scores).0
    }
}

/// Number of grid points per sign, `ceil(log_{4/3}((4/3) r^{-d}))`.
pub fn grid_size(d: usize, r: f64) -> usize {
    grid_size_for_volume(r.powi(d as i32))
}

fn grid_size_for_volume(vol: f64) -> usize {
    ((4.0 / 3.0 / vol).ln() / (4.0f64 / 3.0).ln()).ceil().max(1.0) as usize
}

/// The signed grid `{+-(3/4)^i : i = 1..=n}`.
pub fn signed_grid(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 1..=n {
        let e = 0.75f64.powi(i as i32);
        out.push(e);
        out.push(-e);
    }
    out
}

fn argmax_with_grid(
    emb: &BilinearEmbedding,
    oracle: &dyn PlanningOracle,
    theta: &[f64],
    h: usize,
    eta: f64,
    n: usize,
    gaps: &[f64],
) -> usize {
    let mut best = (emb.reference, f64::NEG_INFINITY);
    for eps in signed_grid(n) {
        let tilted: Vec<Vec<f64>> = emb
            .theta_ref
            .iter()
            .enumerate()
            .map(|(layer, t)| {
                t.iter()
                    .enumerate()
                    .map(|(j, tj)| eta * eps * eps * tj + if layer == h { eps * theta[j] } else { 0.0 })
                    .collect()
            })
            .collect();
        let m = oracle.plan(emb, &tilted);
        let score = dot(&emb.x[m][h], theta).abs() / (1.0 + eta * gaps[m]).sqrt();
        if score > best.1 || (score == best.1 && m < best.0) {
            best = (m, score);
        }
    }
    best.0
}

/// Approximate maximizer of `|<X_h(M), theta>| / sqrt(1 + eta * gap(M))`
/// using only linear planning-oracle calls on a geometric grid of scales.
pub fn igw_argmax(
    emb: &BilinearEmbedding,
    oracle: &dyn PlanningOracle,
    theta: &[f64],
    h: usize,
    eta: f64,
    r: f64,
) -> Result<usize> {
    if h >= emb.horizon || theta.len() != emb.dim {
        return Err(DecError::InvalidParams("layer or direction has the wrong shape".into()));
    }
    if !(r > 0.0 && r < 1.0) || !(eta >= 0.0) {
        return Err(DecError::InvalidParams(format!("need r in (0,1) and eta >= 0, got r={r}, eta={eta}")));
    }
    Ok(argmax_with_grid(emb, oracle, theta, h, eta, grid_size(emb.dim, r), &emb.gaps()))
}

/// Orthonormal basis (columns) for the span of the layer's factors.
fn span_basis(emb: &BilinearEmbedding, h: usize) -> DMatrix<f64> {
    let d = emb.dim;
    let cols: Vec<f64> = emb.x.iter().flat_map(|layers| layers[h].iter().copied()).collect();
    let mat = DMatrix::from_column_slice(d, emb.len(), &cols);
    let svd = mat.svd(true, false);
    let top = svd.singular_values.max();
    if top <= 0.0 {
        return DMatrix::zeros(d, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > RANK_CUTOFF * top.max(1.0)).collect();
    if keep.len() == d {
        return DMatrix::identity(d, d);
    }
    let u = svd.u.expect("left singular vectors requested");
    DMatrix::from_fn(d, keep.len(), |i, j| u[(i, keep[j])])
}

/// Greedy volume-maximizing choice of `k` vectors (Gram-Schmidt residuals).
fn greedy_init(coords: &[DVector<f64>], k: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(k);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = (0usize, -1.0f64);
        for (i, v) in coords.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let mut res = v.clone();
            for b in &basis {
                res -= b * b.dot(v);
            }
            let n = res.norm();
            if n > best.1 {
                best = (i, n);
            }
        }
        let mut res = coords[best.0].clone();
        for b in &basis {
            res -= b * b.dot(&coords[best.0]);
        }
        basis.push(&res / res.norm());
        chosen.push(best.0);
    }
    chosen
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanner {
    /// Selected models; the design is uniform over them.
    pub members: Vec<usize>,
    /// Dimension of the span of the layer's factors.
    pub span_dim: usize,
    pub swaps: usize,
}

/// Barycentric spanner of the reweighted factors at layer `h`.
///
/// `init`, when given, must list `span_dim` models with linearly
/// independent factors; otherwise a greedy volume-maximizing subset is used.
pub fn igw_spanner(
    emb: &BilinearEmbedding,
    oracle: &dyn PlanningOracle,
    h: usize,
    eta: f64,
    init: Option<&[usize]>,
) -> Result<Spanner> {
    if h >= emb.horizon {
        return Err(DecError::InvalidParams(format!("layer {h} out of range")));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(DecError::InvalidParams(format!("eta must be nonnegative, got {eta}")));
    }
    let basis = span_basis(emb, h);
    let k = basis.ncols();
    if k == 0 {
        return Ok(Spanner { members: vec![emb.reference], span_dim: 0, swaps: 0 });
    }
    let gaps = emb.gaps();
    let coords: Vec<DVector<f64>> = emb
        .reweighted(h, eta)
        .into_iter()
        .map(|y| basis.transpose() * DVector::from_vec(y))
        .collect();
    let mut members = match init {
        Some(ids) => {
            if ids.len() != k || ids.iter().any(|&i| i >= emb.len()) {
                return Err(DecError::InvalidEmbedding(format!("init must list {k} class members")));
            }
            ids.to_vec()
        }
        None => greedy_init(&coords, k),
    };
    let matrix = |ids: &[usize]| DMatrix::from_columns(&ids.iter().map(|&i| coords[i].clone()).collect::<Vec<_>>());
    let mut c = matrix(&members);
    let det0 = c.determinant().abs();
    if !(det0 > 0.0) {
        return Err(DecError::InvalidEmbedding("initial collection is linearly dependent".into()));
    }
    let gmax = gaps.iter().copied().fold(0.0, f64::max);
    let n = grid_size_for_volume(det0 / (2f64.sqrt() * (1.0 + eta * gmax).sqrt()));
    let cap = ((1.0 / det0).ln() / 2f64.sqrt().ln()).ceil().max(0.0) as usize + k;
    let mut swaps = 0;
    'search: loop {
        let det = c.determinant();
        let inv = c.clone().try_inverse().ok_or_else(|| DecError::NumericFailure("singular spanner basis".into()))?;
        for i in 0..k {
            // det(Y, C_{-i}) = <theta_k, Y> with theta_k = det(C) * row i of C^{-1}.
            let theta_k: DVector<f64> = inv.row(i).transpose() * det;
            let theta_full = &basis * &theta_k;
            let m = argmax_with_grid(emb, oracle, theta_full.as_slice(), h, eta, n, &gaps);
            if theta_k.dot(&coords[m]).abs() >= 2f64.sqrt() * det.abs() * (1.0 + SWAP_SLACK) {
                members[i] = m;
                c = matrix(&members);
                swaps += 1;
                if swaps > cap {
                    return Err(DecError::NonconvergenceGuard(swaps));
                }
                continue 'search;
            }
        }
        break;
    }
    Ok(Spanner { members, span_dim: k, swaps })
}

/// Coefficients expressing every reweighted factor in the spanner basis.
pub fn spanner_coefficients(emb: &BilinearEmbedding, h: usize, eta: f64, spanner: &Spanner) -> Result<Vec<Vec<f64>>> {
    let basis = span_basis(emb, h);
    if basis.ncols() != spanner.span_dim {
        return Err(DecError::InvalidEmbedding("spanner does not match the layer's span".into()));
    }
    let coords: Vec<DVector<f64>> = emb
        .reweighted(h, eta)
        .into_iter()
        .map(|y| basis.transpose() * DVector::from_vec(y))
        .collect();
    let c = DMatrix::from_columns(&spanner.members.iter().map(|&i| coords[i].clone()).collect::<Vec<_>>());
    let lu = c.lu();
    coords
        .iter()
        .map(|y| {
            lu.solve(y).map(|v| v.as_slice().to_vec()).ok_or_else(|| DecError::NumericFailure("singular spanner basis".into()))
        })
        .collect()
}

/// `sup_i <Sigma_q^+ y_i, y_i>` with `Sigma_q = sum_j q_j y_j y_j^T`, using an
/// eigendecomposition pseudoinverse.
pub fn design_test(vectors: &[Vec<f64>], design: &[f64]) -> Result<f64> {
    if vectors.len() != design.len() {
        return Err(DecError::WeightDim { expected: vectors.len(), got: design.len() });
    }
    let d = vectors.first().map_or(0, Vec::len);
    let mut sigma = DMatrix::<f64>::zeros(d, d);
    for (v, &q) in vectors.iter().zip(design) {
        let y = DVector::from_column_slice(v);
        sigma += &y * y.transpose() * q;
    }
    let eig = sigma.symmetric_eigen();
    let cutoff = RANK_CUTOFF * eig.eigenvalues.iter().copied().fold(1.0, f64::max);
    let mut pinv = DMatrix::<f64>::zeros(d, d);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > cutoff {
            let u = eig.eigenvectors.column(i);
            pinv += u * u.transpose() / lam;
        }
    }
    Ok(vectors
        .iter()
        .map(|v| {
            let y = DVector::from_column_slice(v);
            (y.transpose() * &pinv * &y)[(0, 0)]
        })
        .fold(0.0, f64::max))
}

/// Distribution over the mixed policies of class members.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearCover {
    pub models: Vec<usize>,
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub eta: f64,
    /// Per-layer probability mass moved to the estimation policy is `alpha / H`.
    pub alpha: f64,
    /// Certified upper bound on the DEC.
    pub value: f64,
    pub designs: Vec<Spanner>,
}

/// Inverse gap weighting over the per-layer spanner designs mixed with the
/// reference. `c_opt` is the approximation factor of the design solver
/// (`2 d` for spanners).
pub fn pcigw_bilinear(
    emb: &BilinearEmbedding,
    oracle: &dyn PlanningOracle,
    gamma: f64,
    c_opt: f64,
    on_policy: bool,
) -> Result<BilinearCover> {
    if !(gamma > 0.0 && gamma.is_finite()) || !(c_opt >= 1.0) {
        return Err(DecError::InvalidParams(format!("need gamma > 0 and c_opt >= 1, got {gamma}, {c_opt}")));
    }
    let hh = emb.horizon as f64;
    let scale = c_opt * emb.discrepancy_bound.powi(2) * emb.dim as f64;
    let (eta, alpha, value) = if on_policy {
        (gamma / (3.0 * hh.powi(3) * scale), 0.0, 9.0 * hh.powi(3) * scale / gamma)
    } else {
        let threshold = 72.0 * hh.powi(4) * scale;
        if gamma < threshold {
            return Err(DecError::GammaTooSmall { gamma, threshold });
        }
        (
            gamma / (6.0 * hh.powi(4) * scale),
            (18.0 * hh.powi(4) * scale / gamma).sqrt(),
            (72.0 * hh.powi(4) * scale / gamma).sqrt(),
        )
    };
    let designs: Vec<Spanner> = (0..emb.horizon).map(|h| igw_spanner(emb, oracle, h, eta, None)).collect::<Result<_>>()?;
    let mut q = vec![0.0; emb.len()];
    q[emb.reference] += 0.5;
    for s in &designs {
        for &m in &s.members {
            q[m] += 0.5 / (hh * s.members.len() as f64);
        }
    }
    let models: Vec<usize> = (0..emb.len()).filter(|&m| q[m] > 0.0).collect();
    let gaps = emb.gaps();
    let total = |l: f64| models.iter().map(|&m| q[m] / (l + eta * gaps[m])).sum::<f64>() - 1.0;
    let lambda = bisect_decreasing(total, 0.5, 1.0);
    let mut weights: Vec<f64> = models.iter().map(|&m| q[m] / (lambda + eta * gaps[m])).collect();
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    Ok(BilinearCover { models, weights, lambda, eta, alpha, value, designs })
}

impl BilinearCover {
    /// Pushes the cover forward to a distribution over decisions, given the
    /// decision each model's policy plays (single-layer, on-policy classes).
    pub fn decision_distribution(&self, decision_of: &[usize], num_decisions: usize) -> Vec<f64> {
        let mut p = vec![0.0; num_decisions];
        for (&m, &w) in self.models.iter().zip(&self.weights) {
            p[decision_of[m]] += w;
        }
        p
    }
}

/// Linear bandit with arms and parameters in the nonnegative orthant,
/// Bernoulli rewards with mean `<arm, theta>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBandit {
    pub class: ModelClass,
    pub embedding: BilinearEmbedding,
    /// Best arm of each model.
    pub decision_of: Vec<usize>,
}

pub fn linear_bandit_embedding(arms: &[Vec<f64>], thetas: &[Vec<f64>], reference: usize) -> Result<LinearBandit> {
    let d = arms.first().map_or(0, Vec::len);
    if d == 0 || thetas.is_empty() || arms.iter().chain(thetas).any(|v| v.len() != d) {
        return Err(DecError::InvalidEmbedding("arms and parameters must share a positive dimension".into()));
    }
    if arms.iter().chain(thetas).flatten().any(|&v| v < 0.0) {
        return Err(DecError::InvalidEmbedding("arms and parameters must be nonnegative".into()));
    }
    if reference >= thetas.len() {
        return Err(DecError::IndexOutOfRange { index: reference, len: thetas.len() });
    }
    let models = thetas
        .iter()
        .map(|t| Model::bernoulli(&arms.iter().map(|a| dot(a, t)).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let decision_of: Vec<usize> = models.iter().map(|m| m.best_decision().0).collect();
    let x = decision_of.iter().map(|&a| vec![arms[a].clone()]).collect();
    let w = thetas
        .iter()
        .map(|t| vec![t.iter().zip(&thetas[reference]).map(|(a, b)| a - b).collect()])
        .collect();
    let embedding = BilinearEmbedding::new(x, w, vec![thetas[reference].clone()], reference, 1.0)?;
    Ok(LinearBandit { class: ModelClass::new(models)?, embedding, decision_of })
}

/// Tabular class embedded through reference occupancies (X) and Bellman
/// residuals under the reference dynamics (W), in dimension S*A.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularBilinear {
    pub embedding: BilinearEmbedding,
    pub policies: Vec<crate::mdp::Policy>,
}

pub fn tabular_embedding(models: &[TabularMdp], reference: usize) -> Result<TabularBilinear> {
    let refm = models.get(reference).ok_or(DecError::IndexOutOfRange { index: reference, len: models.len() })?;
    if models.iter().any(|m| !m.same_shape(refm)) {
        return Err(DecError::InvalidEmbedding("all MDPs must share H, S and A".into()));
    }
    if models.iter().any(|m| m.initial() != refm.initial()) {
        return Err(DecError::InvalidEmbedding("all MDPs must share the initial distribution".into()));
    }
    let (h, s, a) = (refm.horizon(), refm.num_states(), refm.num_actions());
    let mut x = Vec::with_capacity(models.len());
    let mut w = Vec::with_capacity(models.len());
    let mut policies = Vec::with_capacity(models.len());
    for m in models {
        let plan = value_iteration(m);
        let occ = occupancy(refm, &plan.policy)?;
        x.push(occ.d.iter().map(|layer| layer.iter().flatten().copied().collect()).collect());
        let residual: Vec<Vec<f64>> = (0..h)
            .map(|hh| {
                let mut row = Vec::with_capacity(s * a);
                for ss in 0..s {
                    for aa in 0..a {
                        let next: f64 =
                            if hh + 1 < h { dot(refm.kernel(hh, ss, aa), &plan.v[hh + 1]) } else { 0.0 };
                        let r = plan.q[hh][ss][aa] - refm.mean_reward(hh, ss, aa) - next;
                        row.push(if r.abs() <= 1e-12 { 0.0 } else { r });
                    }
                }
                row
            })
            .collect();
        w.push(residual);
        policies.push(plan.policy);
    }
    let theta_ref = (0..h)
        .map(|hh| (0..s).flat_map(|ss| (0..a).map(move |aa| (ss, aa))).map(|(ss, aa)| refm.mean_reward(hh, ss, aa)).collect())
        .collect();
    let embedding = BilinearEmbedding::new(x, w, theta_ref, reference, 2.0)?;
    Ok(TabularBilinear { embedding, policies })
}
