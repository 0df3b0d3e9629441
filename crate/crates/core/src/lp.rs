//! Dense two-phase primal simplex with dual extraction.
//!
//! Problems have the general form
//!
//! ```text
//! minimize    cᵀy
//! subject to  A_in y ≤ b_in
//!             A_eq y = b_eq
//! ```
//!
//! with `y` free. Internally every free variable is split as `y⁺ − y⁻`, each
//! inequality row gets a slack, rows are sign-normalised so the right-hand
//! side is nonnegative, and artificial columns are added wherever the slack
//! cannot start in the basis.
//!
//! Pivoting uses Dantzig's rule until `3·(m+n)` degenerate pivots have been
//! made, then switches to Bland's rule for the rest of the solve, which
//! guarantees termination.
//!
//! Multipliers are reported in Lagrangian form: at an optimum
//! `c + A_inᵀλ + A_eqᵀν = 0` with `λ ≥ 0`, and the dual value
//! `−b_inᵀλ − b_eqᵀν` equals the primal value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, Vector};
use crate::tol;

const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vector,
    pub a_in: Matrix,
    pub b_in: Vector,
    pub a_eq: Matrix,
    pub b_eq: Vector,
}

impl LpProblem {
    /// Problem with `n` variables, zero objective and no constraints.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            a_in: Matrix::zeros(0, n),
            b_in: Vec::new(),
            a_eq: Matrix::zeros(0, n),
            b_eq: Vec::new(),
        }
    }

    pub fn with_objective(mut self, c: Vector) -> Self {
        self.objective = c;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_ineq(&mut self, row: &[f64], rhs: f64) {
        self.a_in.push_row(row);
        self.b_in.push(rhs);
    }

    pub fn add_eq(&mut self, row: &[f64], rhs: f64) {
        self.a_eq.push_row(row);
        self.b_eq.push(rhs);
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.objective.len();
        if self.a_in.cols() != n || self.a_eq.cols() != n {
            return Err(Error::MalformedProblem(format!(
                "constraint width ({}, {}) differs from objective length {n}",
                self.a_in.cols(),
                self.a_eq.cols()
            )));
        }
        if self.a_in.rows() != self.b_in.len() || self.a_eq.rows() != self.b_eq.len() {
            return Err(Error::MalformedProblem(
                "row count differs from right-hand side length".into(),
            ));
        }
        let finite = self
            .objective
            .iter()
            .chain(&self.b_in)
            .chain(&self.b_eq)
            .all(|v| v.is_finite());
        if !finite || !self.a_in.is_finite() || !self.a_eq.is_finite() {
            return Err(Error::MalformedProblem("non-finite entry".into()));
        }
        Ok(())
    }

    /// Largest violation of any constraint at `y`.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        let ineq = self
            .a_in
            .iter_rows()
            .zip(&self.b_in)
            .map(|(r, b)| dot(r, y) - b)
            .fold(0.0_f64, f64::max);
        self.a_eq
            .iter_rows()
            .zip(&self.b_eq)
            .map(|(r, b)| (dot(r, y) - b).abs())
            .fold(ineq, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless `status` is `Optimal`.
    pub point: Vector,
    /// `+∞` when infeasible, `−∞` when unbounded.
    pub value: f64,
    pub dual_ineq: Vector,
    pub dual_eq: Vector,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        let value = match status {
            LpStatus::Infeasible => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        Self {
            status,
            point: Vec::new(),
            value,
            dual_ineq: Vec::new(),
            dual_eq: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `−b_inᵀλ − b_eqᵀν`.
    pub fn dual_value(&self, problem: &LpProblem) -> f64 {
        -dot(&problem.b_in, &self.dual_ineq) - dot(&problem.b_eq, &self.dual_eq)
    }
}

/// Solves the LP. Deterministic for a fixed input.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.check_shape()?;
    Tableau::build(problem).solve(problem)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Dantzig,
    Bland,
}

struct Tableau {
    n: usize,
    m_in: usize,
    /// Constraint rows, each of width `ncols + 1` (last entry is the rhs).
    t: Vec<Vec<f64>>,
    ncols: usize,
    /// First artificial column; columns at or beyond this never enter in phase 2.
    art_start: usize,
    basis: Vec<usize>,
    /// Column holding `+e_i` in the sign-normalised system, per row.
    unit_col: Vec<usize>,
    /// `±1` sign applied to each row during normalisation.
    row_sign: Vec<f64>,
    rule: Rule,
    degenerate: usize,
    pivots: usize,
}

impl Tableau {
    fn build(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let m_in = p.a_in.rows();
        let m_eq = p.a_eq.rows();
        let m = m_in + m_eq;

        let mut row_sign = Vec::with_capacity(m);
        let mut needs_art = Vec::with_capacity(m);
        for &b in &p.b_in {
            let s = if b < 0.0 { -1.0 } else { 1.0 };
            row_sign.push(s);
            needs_art.push(s < 0.0);
        }
        for &b in &p.b_eq {
            row_sign.push(if b < 0.0 { -1.0 } else { 1.0 });
            needs_art.push(true);
        }
        let n_art = needs_art.iter().filter(|&&a| a).count();
        let art_start = 2 * n + m_in;
        let ncols = art_start + n_art;

        let mut t = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0; m];
        let mut unit_col = vec![0; m];
        let mut next_art = art_start;
        for i in 0..m {
            let s = row_sign[i];
            let (row, rhs) = if i < m_in {
                (p.a_in.row(i), p.b_in[i])
            } else {
                (p.a_eq.row(i - m_in), p.b_eq[i - m_in])
            };
            for j in 0..n {
                t[i][j] = s * row[j];
                t[i][n + j] = -s * row[j];
            }
            if i < m_in {
                t[i][2 * n + i] = s;
            }
            t[i][ncols] = s * rhs;
            if needs_art[i] {
                t[i][next_art] = 1.0;
                basis[i] = next_art;
                unit_col[i] = next_art;
                next_art += 1;
            } else {
                basis[i] = 2 * n + i;
                unit_col[i] = 2 * n + i;
            }
        }
        Self {
            n,
            m_in,
            t,
            ncols,
            art_start,
            basis,
            unit_col,
            row_sign,
            rule: Rule::Dantzig,
            degenerate: 0,
            pivots: 0,
        }
    }

    fn rows(&self) -> usize {
        self.t.len()
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, row) in self.t.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.t
            .iter()
            .enumerate()
            .map(|(i, r)| cost[self.basis[i]] * r[self.ncols])
            .sum()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.ncols + 1;
        let p = self.t[r][c];
        for j in 0..width {
            self.t[r][j] /= p;
        }
        self.t[r][c] = 1.0;
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f == 0.0 {
                continue;
            }
            for j in 0..width {
                row[j] -= f * pivot_row[j];
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs primal simplex iterations for `cost` over columns `< allowed`.
    /// Returns `Ok(false)` on an unbounded direction.
    fn iterate(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        let m = self.rows();
        let degenerate_limit = 3 * (m + self.n);
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::NumericalFailure("pivot limit reached".into()));
            }
            let d = self.reduced_costs(cost);
            let dscale = cost.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
            let threshold = -tol::FEAS * dscale;
            let entering = match self.rule {
                Rule::Dantzig => {
                    let mut best: Option<(usize, f64)> = None;
                    for (j, &dj) in d.iter().enumerate().take(allowed) {
                        if dj < threshold && best.is_none_or(|(_, b)| dj < b) {
                            best = Some((j, dj));
                        }
                    }
                    best.map(|(j, _)| j)
                }
                Rule::Bland => (0..allowed).find(|&j| d[j] < threshold),
            };
            let Some(e) = entering else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[i][e];
                if a > tol::FEAS {
                    let ratio = self.t[i][self.ncols].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best - tol::FEAS * (1.0 + best.abs())
                                || (ratio <= best + tol::FEAS * (1.0 + best.abs())
                                    && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= tol::FEAS {
                self.degenerate += 1;
                if self.degenerate >= degenerate_limit {
                    self.rule = Rule::Bland;
                }
            }
            self.pivot(r, e);
        }
    }

    fn solve(mut self, p: &LpProblem) -> Result<LpSolution> {
        let n = self.n;
        let m = self.rows();

        if self.art_start < self.ncols {
            let mut phase1 = vec![0.0; self.ncols];
            for c in phase1.iter_mut().skip(self.art_start) {
                *c = 1.0;
            }
            let bounded = self.iterate(&phase1, self.ncols)?;
            debug_assert!(bounded, "phase one is bounded below by zero");
            let rhs_scale = self
                .t
                .iter()
                .fold(1.0_f64, |a, r| a.max(r[self.ncols].abs()));
            if self.objective(&phase1) > tol::FEAS * rhs_scale * (m as f64).max(1.0) {
                return Ok(LpSolution::without_point(LpStatus::Infeasible));
            }
            // Drive zero-valued artificials out of the basis where possible.
            for i in 0..m {
                if self.basis[i] < self.art_start {
                    continue;
                }
                let best = (0..self.art_start).map(|j| (j, self.t[i][j].abs())).fold(
                    (usize::MAX, tol::FEAS),
                    |acc, x| if x.1 > acc.1 { x } else { acc },
                );
                if best.0 != usize::MAX {
                    self.pivot(i, best.0);
                }
                // Otherwise the row is redundant; the artificial stays basic at zero.
            }
        }

        let mut cost = vec![0.0; self.ncols];
        for j in 0..n {
            cost[j] = p.objective[j];
            cost[n + j] = -p.objective[j];
        }
        if !self.iterate(&cost, self.art_start)? {
            return Ok(LpSolution::without_point(LpStatus::Unbounded));
        }

        let mut x = vec![0.0; self.ncols];
        for i in 0..m {
            x[self.basis[i]] = self.t[i][self.ncols];
        }
        let point: Vector = (0..n).map(|j| x[j] - x[n + j]).collect();
        let value = dot(&p.objective, &point);

        let d = self.reduced_costs(&cost);
        let mut dual_ineq = Vec::with_capacity(self.m_in);
        let mut dual_eq = Vec::with_capacity(m - self.m_in);
        for i in 0..m {
            // π_i = −d(unit column), then undo the row sign; multipliers are −π.
            let pi = -d[self.unit_col[i]] * self.row_sign[i];
            let mult = if pi == 0.0 { 0.0 } else { -pi };
            if i < self.m_in {
                dual_ineq.push(mult);
            } else {
                dual_eq.push(mult);
            }
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            point,
            value,
            dual_ineq,
            dual_eq,
        })
    }
}
