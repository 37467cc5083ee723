//! Dense two-phase primal simplex with Bland's rule.

use crate::error::{DecError, Result};

pub const TOL: f64 = 1e-9;
pub const MAX_ITERS: usize = 1_000_000;
const BLAND_AFTER: usize = 20_000;
const NOISE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    coefs: Vec<f64>,
    cmp: Cmp,
    rhs: f64,
}

/// `maximize c.x` subject to linear rows. Variables are nonnegative unless
/// declared free.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram { objective, free: vec![false; n], rows: Vec::new() }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::maximize(objective.into_iter().map(|c| -c).collect())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    pub fn add_row(&mut self, coefs: Vec<f64>, cmp: Cmp, rhs: f64) {
        assert_eq!(coefs.len(), self.num_vars(), "row width must match variable count");
        self.rows.push(Row { coefs, cmp, rhs });
    }

    /// Sparse convenience form of `add_row`.
    pub fn add_sparse_row(&mut self, terms: &[(usize, f64)], cmp: Cmp, rhs: f64) {
        let mut coefs = vec![0.0; self.num_vars()];
        for &(j, v) in terms {
            coefs[j] += v;
        }
        self.add_row(coefs, cmp, rhs);
    }

    pub fn solve(&self) -> Result<LpSolution> {
        // Column layout after splitting: each original column j maps to
        // `pos[j]`, free ones also to `neg[j]`.
        let n0 = self.num_vars();
        let mut pos = Vec::with_capacity(n0);
        let mut neg = vec![None; n0];
        let mut n = 0;
        for j in 0..n0 {
            pos.push(n);
            n += 1;
            if self.free[j] {
                neg[j] = Some(n);
                n += 1;
            }
        }
        let expand = |coefs: &[f64]| {
            let mut out = vec![0.0; n];
            for j in 0..n0 {
                out[pos[j]] = coefs[j];
                if let Some(k) = neg[j] {
                    out[k] = -coefs[j];
                }
            }
            out
        };

        let mut rows: Vec<Row> = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let mut coefs = expand(&r.coefs);
            let (mut cmp, mut rhs) = (r.cmp, r.rhs);
            if rhs < 0.0 {
                coefs.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
                cmp = match cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
            }
            rows.push(Row { coefs, cmp, rhs });
        }
        let rows = drop_dependent_equalities(rows)?;

        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
        let n_art = rows.iter().filter(|r| r.cmp != Cmp::Le).count();
        let width = n + n_slack + n_art;
        let art_start = n + n_slack;

        let mut tab = vec![vec![0.0; width + 1]; m];
        let mut basis = vec![0usize; m];
        let (mut s, mut a) = (n, art_start);
        for (i, r) in rows.iter().enumerate() {
            tab[i][..n].copy_from_slice(&r.coefs);
            tab[i][width] = r.rhs;
            match r.cmp {
                Cmp::Le => {
                    tab[i][s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Cmp::Ge => {
                    tab[i][s] = -1.0;
                    s += 1;
                    tab[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
                Cmp::Eq => {
                    tab[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
            }
        }
        let mut t = Tableau { tab, basis, width, iterations: 0 };

        if n_art > 0 {
            let mut obj = vec![0.0; width + 1];
            for j in art_start..width {
                obj[j] = -1.0;
            }
            for i in 0..m {
                if t.basis[i] >= art_start {
                    for j in 0..=width {
                        obj[j] += t.tab[i][j];
                    }
                }
            }
            t.optimize(&mut obj, width)?;
            let scale = rows.iter().map(|r| r.rhs.abs()).fold(1.0, f64::max);
            if obj[width] > 1e-7 * scale {
                return Err(DecError::LpInfeasible);
            }
            t.evict_artificials(art_start);
        }

        let mut obj = vec![0.0; width + 1];
        obj[..n].copy_from_slice(&expand(&self.objective));
        for i in 0..t.tab.len() {
            let cb = obj[t.basis[i]];
            if cb != 0.0 {
                let row = t.tab[i].clone();
                for j in 0..=width {
                    obj[j] -= cb * row[j];
                }
            }
        }
        t.optimize(&mut obj, art_start)?;

        let mut xs = vec![0.0; n];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < n {
                xs[b] = t.tab[i][width].max(0.0);
            }
        }
        let x: Vec<f64> = (0..n0).map(|j| xs[pos[j]] - neg[j].map_or(0.0, |k| xs[k])).collect();
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective, iterations: t.iterations })
    }
}

/// Removes equality rows that are linear combinations of earlier ones.
fn drop_dependent_equalities(rows: Vec<Row>) -> Result<Vec<Row>> {
    let mut echelon: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut keep = Vec::with_capacity(rows.len());
    for r in rows {
        if r.cmp != Cmp::Eq {
            keep.push(r);
            continue;
        }
        let mut v = r.coefs.clone();
        v.push(r.rhs);
        let n = r.coefs.len();
        for (p, e) in &echelon {
            let f = v[*p];
            if f != 0.0 {
                for (vj, ej) in v.iter_mut().zip(e) {
                    *vj -= f * ej;
                }
            }
        }
        let scale = r.coefs.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        let (p, big) = v[..n]
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (j, x)| if x.abs() > acc.1 { (j, x.abs()) } else { acc });
        if big <= 1e-10 * scale {
            if v[n].abs() > 1e-8 * scale.max(r.rhs.abs()) {
                return Err(DecError::LpInfeasible);
            }
            continue;
        }
        let piv = v[p];
        v.iter_mut().for_each(|x| *x /= piv);
        for (_, e) in echelon.iter_mut() {
            let f = e[p];
            if f != 0.0 {
                for (ej, vj) in e.iter_mut().zip(&v) {
                    *ej -= f * vj;
                }
            }
        }
        echelon.push((p, v));
        keep.push(r);
    }
    Ok(keep)
}

struct Tableau {
    tab: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    iterations: usize,
}

impl Tableau {
    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let width = self.width;
        let piv = self.tab[r][c];
        for v in self.tab[r].iter_mut() {
            *v /= piv;
        }
        let prow = self.tab[r].clone();
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for j in 0..=width {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for j in 0..=width {
                obj[j] -= f * prow[j];
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on columns `< allowed` until optimal.
    ///
    /// Entering columns follow Bland's rule. Ties in the ratio test go to the
    /// largest pivot element until `BLAND_AFTER` iterations, then to the
    /// lowest basic index. A column whose reduced cost is at rounding level
    /// and which has no blocking row is skipped instead of reported unbounded.
    fn optimize(&mut self, obj: &mut [f64], allowed: usize) -> Result<()> {
        let width = self.width;
        let mut skipped = vec![false; allowed];
        loop {
            if self.iterations >= MAX_ITERS {
                return Err(DecError::NumericFailure(format!(
                    "simplex exceeded {MAX_ITERS} iterations"
                )));
            }
            let scale = obj[..allowed].iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let Some(c) = (0..allowed).find(|&j| !skipped[j] && obj[j] > TOL) else {
                return Ok(());
            };
            let bland = self.iterations >= BLAND_AFTER;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.tab.iter().enumerate() {
                let a = row[c];
                if a > TOL {
                    let ratio = row[width] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let better = if ratio < lr - 1e-12 {
                                true
                            } else if ratio <= lr + 1e-12 {
                                if bland { self.basis[i] < self.basis[li] } else { a > self.tab[li][c] }
                            } else {
                                false
                            };
                            if better { Some((i, ratio)) } else { Some((li, lr)) }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                if obj[c] <= NOISE * scale {
                    skipped[c] = true;
                    continue;
                }
                return Err(DecError::LpUnbounded);
            };
            self.pivot(obj, r, c);
            skipped.iter_mut().for_each(|s| *s = false);
            self.iterations += 1;
        }
    }

    /// After phase one, pivots remaining basic artificials out on any real
    /// column, or drops their (redundant) rows.
    fn evict_artificials(&mut self, art_start: usize) {
        let mut dummy = vec![0.0; self.width + 1];
        let mut i = 0;
        while i < self.tab.len() {
            if self.basis[i] >= art_start {
                let col = (0..art_start).find(|&j| self.tab[i][j].abs() > TOL);
                match col {
                    Some(j) => {
                        self.pivot(&mut dummy, i, j);
                        i += 1;
                    }
                    None => {
                        self.tab.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
}
