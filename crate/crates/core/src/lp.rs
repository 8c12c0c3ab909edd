//! Dense simplex solver for the small linear programs used throughout the crate.
//!
//! Problems are stated in inequality form over free variables,
//!
//! ```text
//! minimize  c·x   subject to   A x ≤ b,   E x = e,
//! ```
//!
//! and solved through their dual, `max −b·y − e·z` subject to `Aᵀy + Eᵀz = −c`,
//! `y ≥ 0`. The dual tableau has one row per primal variable, so it stays short
//! even when a program carries hundreds of constraints. The primal point is
//! read back from the simplex multipliers of the final basis.
//!
//! Pivoting is deterministic: Dantzig's rule, falling back to Bland's rule
//! during long runs of degenerate pivots.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

const PIVOT_TOL: f64 = 1e-10;
const OPT_TOL: f64 = 1e-10;
const PHASE1_TOL: f64 = 1e-8;
const FEAS_TOL: f64 = 1e-6;
const DEGENERATE_STREAK: usize = 40;
const REFACTOR_EVERY: usize = 50;
const HARRIS_TOL: f64 = 1e-9;
/// Pivots after which an apparent optimum is re-checked on a rebuilt tableau.
const VERIFY_AFTER: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is infeasible or unbounded")]
    InfeasibleOrUnbounded,
    #[error("simplex iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// A linear program over free variables: `min c·x` s.t. `A x ≤ b`, `E x = e`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    le_rows: Vec<f64>,
    le_rhs: Vec<f64>,
    eq_rows: Vec<f64>,
    eq_rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Nonnegative multipliers of the `≤` rows, in insertion order.
    pub le_duals: Vec<f64>,
    /// Multipliers of the equality rows, in insertion order.
    pub eq_duals: Vec<f64>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_le(&self) -> usize {
        self.le_rhs.len()
    }

    pub fn num_eq(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn set_objective(&mut self, c: &[f64]) {
        assert_eq!(c.len(), self.num_vars, "objective length");
        self.objective.copy_from_slice(c);
    }

    pub fn set_objective_coef(&mut self, var: usize, value: f64) {
        self.objective[var] = value;
    }

    /// Adds `row·x ≤ rhs`.
    pub fn add_le(&mut self, row: &[f64], rhs: f64) {
        assert_eq!(row.len(), self.num_vars, "constraint length");
        self.le_rows.extend_from_slice(row);
        self.le_rhs.push(rhs);
    }

    /// Adds `Σ coef·x[var] ≤ rhs` from sparse entries.
    pub fn add_le_sparse(&mut self, entries: &[(usize, f64)], rhs: f64) {
        let start = self.le_rows.len();
        self.le_rows.resize(start + self.num_vars, 0.0);
        for &(var, coef) in entries {
            self.le_rows[start + var] += coef;
        }
        self.le_rhs.push(rhs);
    }

    /// Adds `row·x = rhs`.
    pub fn add_eq(&mut self, row: &[f64], rhs: f64) {
        assert_eq!(row.len(), self.num_vars, "constraint length");
        self.eq_rows.extend_from_slice(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_eq_sparse(&mut self, entries: &[(usize, f64)], rhs: f64) {
        let start = self.eq_rows.len();
        self.eq_rows.resize(start + self.num_vars, 0.0);
        for &(var, coef) in entries {
            self.eq_rows[start + var] += coef;
        }
        self.eq_rhs.push(rhs);
    }

    fn le_row(&self, i: usize) -> &[f64] {
        &self.le_rows[i * self.num_vars..(i + 1) * self.num_vars]
    }

    fn eq_row(&self, i: usize) -> &[f64] {
        &self.eq_rows[i * self.num_vars..(i + 1) * self.num_vars]
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let n = self.num_vars;
        let m_le = self.num_le();
        let m_eq = self.num_eq();
        let structural = m_le + 2 * m_eq;
        let cols = structural + n;

        let mut cost = vec![0.0; cols];
        let mut tab = Tableau::new(n, cols);
        for i in 0..m_le {
            let row = self.le_row(i);
            for (r, &v) in row.iter().enumerate() {
                tab.set_orig(r, i, v);
            }
            cost[i] = self.le_rhs[i];
        }
        for k in 0..m_eq {
            let row = self.eq_row(k);
            for (r, &v) in row.iter().enumerate() {
                tab.set_orig(r, m_le + 2 * k, v);
                tab.set_orig(r, m_le + 2 * k + 1, -v);
            }
            cost[m_le + 2 * k] = self.eq_rhs[k];
            cost[m_le + 2 * k + 1] = -self.eq_rhs[k];
        }
        let mut sign = vec![1.0; n];
        for r in 0..n {
            let mut rhs = -self.objective[r];
            if rhs < 0.0 {
                sign[r] = -1.0;
                rhs = -rhs;
                for j in 0..structural {
                    let v = tab.orig(r, j);
                    tab.set_orig(r, j, -v);
                }
            }
            tab.set_orig(r, structural + r, 1.0);
            tab.orig_rhs[r] = rhs;
            tab.basis[r] = structural + r;
        }
        tab.load();

        // Phase 1: drive the artificial columns out of the basis.
        tab.cost = (0..cols).map(|j| if j < structural { 0.0 } else { 1.0 }).collect();
        tab.reprice();
        let scale = 1.0 + self.objective.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        tab.run(structural)?;
        if -tab.rhs(n) > PHASE1_TOL * scale {
            return Err(LpError::InfeasibleOrUnbounded);
        }
        for r in 0..n {
            if tab.basis[r] >= structural {
                let pivot_col = (0..structural)
                    .filter(|&j| tab.get(r, j).abs() > 1e-9)
                    .max_by(|&a, &b| tab.get(r, a).abs().total_cmp(&tab.get(r, b).abs()));
                if let Some(j) = pivot_col {
                    tab.pivot(r, j);
                }
            }
        }

        // Phase 2 on the true costs; artificial columns stay in the tableau
        // (never entering) so their reduced costs expose the multipliers.
        tab.cost = cost;
        tab.reprice();
        tab.run(structural)?;

        let mut x: Vec<f64> = (0..n)
            .map(|r| sign[r] * -tab.get(n, structural + r))
            .collect();
        let mut values = vec![0.0; cols];
        for r in 0..n {
            values[tab.basis[r]] = tab.rhs(r);
        }
        if let Some((bx, bv)) = self.refine(&tab.basis, structural) {
            x = bx;
            values.iter_mut().for_each(|v| *v = 0.0);
            for (r, v) in bv.into_iter().enumerate() {
                values[tab.basis[r]] = v;
            }
        }
        let le_duals = values[..m_le].to_vec();
        let eq_duals = (0..m_eq)
            .map(|k| values[m_le + 2 * k] - values[m_le + 2 * k + 1])
            .collect();

        for i in 0..m_le {
            let lhs: f64 = dot(self.le_row(i), &x);
            let b = self.le_rhs[i];
            if lhs - b > FEAS_TOL * (1.0 + b.abs()) {
                return Err(LpError::Numerical(format!(
                    "row {i} violated by {:.3e}",
                    lhs - b
                )));
            }
        }
        for k in 0..m_eq {
            let lhs: f64 = dot(self.eq_row(k), &x);
            let e = self.eq_rhs[k];
            if (lhs - e).abs() > FEAS_TOL * (1.0 + e.abs()) {
                return Err(LpError::Numerical(format!(
                    "equality {k} violated by {:.3e}",
                    lhs - e
                )));
            }
        }
        let objective = dot(&self.objective, &x);
        Ok(LpSolution {
            x,
            objective,
            le_duals,
            eq_duals,
        })
    }
}

impl LinearProgram {
    /// Row of dual column `j` with its rhs; equality rows appear as two
    /// columns of opposite sign.
    fn column(&self, j: usize) -> (Vec<f64>, f64) {
        let m_le = self.num_le();
        if j < m_le {
            return (self.le_row(j).to_vec(), self.le_rhs[j]);
        }
        let k = (j - m_le) / 2;
        let s = if (j - m_le).is_multiple_of(2) { 1.0 } else { -1.0 };
        (self.eq_row(k).iter().map(|v| s * v).collect(), s * self.eq_rhs[k])
    }

    /// Recomputes the primal point and the basic multipliers from the original
    /// data of an all-structural basis, undoing drift accumulated by pivoting.
    fn refine(&self, basis: &[usize], structural: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.num_vars;
        if n == 0 || basis.iter().any(|&j| j >= structural) {
            return None;
        }
        let mut m = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for (r, &j) in basis.iter().enumerate() {
            let (row, rhs) = self.column(j);
            for (c, v) in row.into_iter().enumerate() {
                m[(r, c)] = v;
            }
            b[r] = rhs;
        }
        let lu = m.clone().lu();
        let x = lu.solve(&b)?;
        let v = m.transpose().lu().solve(&-DVector::from_column_slice(&self.objective))?;
        let finite = x.iter().chain(v.iter()).all(|t| t.is_finite());
        finite.then(|| (x.iter().copied().collect(), v.iter().map(|t| t.max(0.0)).collect()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Row-major tableau; row `rows` holds reduced costs, the last column the rhs.
/// The original columns are kept so the tableau can be rebuilt from the
/// current basis when pivoting error piles up.
struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    orig: Vec<f64>,
    orig_rhs: Vec<f64>,
    cost: Vec<f64>,
}

impl Tableau {
    fn new(rows: usize, cols: usize) -> Self {
        let width = cols + 1;
        Self {
            rows,
            width,
            data: vec![0.0; (rows + 1) * width],
            basis: vec![0; rows],
            orig: vec![0.0; rows * cols],
            orig_rhs: vec![0.0; rows],
            cost: vec![0.0; cols],
        }
    }

    #[inline]
    fn cols(&self) -> usize {
        self.width - 1
    }

    #[inline]
    fn orig(&self, r: usize, c: usize) -> f64 {
        self.orig[r * self.cols() + c]
    }

    #[inline]
    fn set_orig(&mut self, r: usize, c: usize, v: f64) {
        let cols = self.cols();
        self.orig[r * cols + c] = v;
    }

    fn load(&mut self) {
        for r in 0..self.rows {
            for c in 0..self.cols() {
                let v = self.orig(r, c);
                self.set(r, c, v);
            }
            let b = self.orig_rhs[r];
            self.set_rhs(r, b);
        }
    }

    /// Reduced costs of `self.cost` for the current rows.
    fn reprice(&mut self) {
        let obj = self.rows;
        for j in 0..self.cols() {
            let mut d = self.cost[j];
            for r in 0..self.rows {
                d -= self.cost[self.basis[r]] * self.get(r, j);
            }
            self.set(obj, j, d);
        }
        let mut z = 0.0;
        for r in 0..self.rows {
            z -= self.cost[self.basis[r]] * self.rhs(r);
        }
        self.set_rhs(obj, z);
    }

    /// Recomputes `B⁻¹[A | b]` and the cost row from the original data.
    /// Returns false, leaving the tableau alone, if the basis is singular.
    fn refactor(&mut self) -> bool {
        let (m, cols) = (self.rows, self.cols());
        let b = DMatrix::from_fn(m, m, |r, k| self.orig(r, self.basis[k]));
        let Some(inv) = b.try_inverse() else {
            return false;
        };
        let a = DMatrix::from_row_slice(m, cols, &self.orig);
        let rows = &inv * a;
        let rhs = &inv * DVector::from_column_slice(&self.orig_rhs);
        if rows.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
            return false;
        }
        for r in 0..m {
            for c in 0..cols {
                self.set(r, c, rows[(r, c)]);
            }
            self.set_rhs(r, rhs[r]);
        }
        for (r, &j) in self.basis.clone().iter().enumerate() {
            for k in 0..m {
                self.set(k, j, if k == r { 1.0 } else { 0.0 });
            }
        }
        self.reprice();
        true
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.width + c] = v;
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.width - 1]
    }

    #[inline]
    fn set_rhs(&mut self, r: usize, v: f64) {
        self.data[r * self.width + self.width - 1] = v;
    }

    /// Smallest ratio, ties to the lowest basic index (Bland).
    fn ratio_test_bland(&self, pc: usize) -> Option<(usize, f64)> {
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.get(r, pc);
            if a > PIVOT_TOL {
                let ratio = self.rhs(r).max(0.0) / a;
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - 1e-12 || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        leave
    }

    /// Two-pass Harris test: among rows whose ratio is within a small
    /// tolerance of the minimum, take the largest pivot.
    fn ratio_test_harris(&self, pc: usize) -> Option<(usize, f64)> {
        let mut bound = f64::INFINITY;
        for r in 0..self.rows {
            let a = self.get(r, pc);
            if a > PIVOT_TOL {
                bound = bound.min((self.rhs(r).max(0.0) + HARRIS_TOL) / a);
            }
        }
        if bound.is_infinite() {
            return None;
        }
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.get(r, pc);
            if a > PIVOT_TOL && self.rhs(r).max(0.0) / a <= bound {
                let better = match leave {
                    None => true,
                    Some((lr, _)) => {
                        let la = self.get(lr, pc);
                        a > la * (1.0 + 1e-12) || (a >= la * (1.0 - 1e-12) && self.basis[r] < self.basis[lr])
                    }
                };
                if better {
                    leave = Some((r, self.rhs(r).max(0.0) / a));
                }
            }
        }
        leave
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.get(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.set(pr, pc, 1.0);
        let (before, rest) = self.data.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[pc];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        self.basis[pr] = pc;
    }

    /// Runs primal simplex pivots; only columns `< enter_limit` may enter.
    /// Optimality and unboundedness are only declared on a freshly rebuilt
    /// tableau.
    fn run(&mut self, enter_limit: usize) -> Result<(), LpError> {
        let max_iter = 50 * (self.rows + self.width) + 1000;
        let obj = self.rows;
        let mut degenerate = 0usize;
        let mut since_refactor = 0usize;
        for _ in 0..max_iter {
            if since_refactor >= REFACTOR_EVERY && self.refactor() {
                since_refactor = 0;
            }
            let bland = degenerate > DEGENERATE_STREAK;
            let mut enter = None;
            let mut best = -OPT_TOL;
            for j in 0..enter_limit {
                let d = self.get(obj, j);
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = enter else {
                if since_refactor >= VERIFY_AFTER && self.refactor() {
                    since_refactor = 0;
                    continue;
                }
                return Ok(());
            };
            let leave = if bland {
                self.ratio_test_bland(pc)
            } else {
                self.ratio_test_harris(pc)
            };
            let Some((pr, ratio)) = leave else {
                if since_refactor > 0 && self.refactor() {
                    since_refactor = 0;
                    continue;
                }
                // An improving ray of the dual: the primal has no feasible point.
                return Err(LpError::Infeasible);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
            since_refactor += 1;
        }
        Err(LpError::IterationLimit(max_iter))
    }
}
