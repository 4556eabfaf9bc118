//! Dense tableau simplex for packing programs
//! `max c·y  s.t.  A y <= b,  y >= 0` with `b >= 0`.
//!
//! Rows can be appended after a solve; the next solve restores primal
//! feasibility with dual simplex pivots and then continues with primal
//! pivots. Both phases use Bland's smallest-index rule.

use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Debug, Clone)]
pub struct PackingTableau<S> {
    n_vars: usize,
    /// Row `i` over structural variables followed by one slack per row.
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    /// Reduced costs; optimal when none is below `-eps`.
    reduced: Vec<S>,
    value: S,
    basis: Vec<usize>,
    objective: Vec<S>,
    eps: S,
    pivots: usize,
}

impl<S: Scalar> PackingTableau<S> {
    pub fn new(objective: Vec<S>) -> Self {
        let n_vars = objective.len();
        Self {
            n_vars,
            rows: Vec::new(),
            rhs: Vec::new(),
            reduced: objective.iter().map(|&c| -c).collect(),
            value: S::zero(),
            basis: Vec::new(),
            objective,
            eps: S::pivot_eps(),
            pivots: 0,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }

    /// Appends `coeffs · y <= rhs` with its slack basic.
    pub fn add_row(&mut self, coeffs: &[S], rhs: S) -> Result<usize> {
        if coeffs.len() != self.n_vars {
            return Err(Error::Input(format!(
                "row has {} coefficients, expected {}",
                coeffs.len(),
                self.n_vars
            )));
        }
        if rhs < S::zero() {
            return Err(Error::Input(format!("negative right-hand side {rhs}")));
        }
        for row in &mut self.rows {
            row.push(S::zero());
        }
        self.reduced.push(S::zero());
        let width = self.n_vars + self.rows.len() + 1;
        let mut row = vec![S::zero(); width];
        row[..self.n_vars].copy_from_slice(coeffs);
        row[width - 1] = S::one();
        let mut b = rhs;
        // Eliminate the currently basic structural variables.
        for (i, &bv) in self.basis.iter().enumerate() {
            let f = row[bv];
            if f != S::zero() {
                for (x, &r) in row.iter_mut().zip(&self.rows[i]) {
                    *x -= f * r;
                }
                b -= f * self.rhs[i];
            }
        }
        self.rows.push(row);
        self.rhs.push(b);
        self.basis.push(width - 1);
        Ok(self.rows.len() - 1)
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for x in self.rows[r].iter_mut() {
            *x /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col];
            if f != S::zero() {
                for (x, &pr) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                self.rows[i][col] = S::zero();
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.reduced[col];
        if f != S::zero() {
            for (x, &pr) in self.reduced.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            self.reduced[col] = S::zero();
            self.value -= f * pivot_rhs;
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    /// Solves to optimality within `max_pivots` additional pivots.
    pub fn solve(&mut self, max_pivots: usize) -> Result<()> {
        let start = self.pivots;
        let eps = self.eps;
        // Dual simplex while some basic variable is negative.
        loop {
            if self.pivots - start > max_pivots {
                return Err(self.pivot_limit());
            }
            let leaving = (0..self.rows.len())
                .filter(|&i| self.rhs[i] < -eps)
                .min_by_key(|&i| self.basis[i]);
            let Some(r) = leaving else { break };
            let mut best: Option<(S, usize)> = None;
            for j in 0..self.reduced.len() {
                let a = self.rows[r][j];
                if a < -eps {
                    let ratio = self.reduced[j].max_of(S::zero()) / -a;
                    if best.is_none_or(|(b, _)| ratio < b) {
                        best = Some((ratio, j));
                    }
                }
            }
            match best {
                Some((_, j)) => self.pivot(r, j),
                None => return Err(Error::Invariant("packing program became infeasible".into())),
            }
        }
        // Primal simplex.
        loop {
            if self.pivots - start > max_pivots {
                return Err(self.pivot_limit());
            }
            let Some(col) = (0..self.reduced.len()).find(|&j| self.reduced[j] < -eps) else {
                return Ok(());
            };
            let mut best: Option<(S, usize, usize)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > eps {
                    let ratio = self.rhs[i].max_of(S::zero()) / a;
                    let better = match best {
                        None => true,
                        Some((b, _, bv)) => ratio < b || (ratio == b && self.basis[i] < bv),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(r, col),
                None => return Err(Error::Invariant(format!("packing program unbounded in y{col}"))),
            }
        }
    }

    fn pivot_limit(&self) -> Error {
        Error::IterationLimit { iterations: self.pivots, best_objective: self.value.to_f64_lossy() }
    }

    pub fn objective_value(&self) -> S {
        self.value
    }

    /// Objective recomputed from the primal values.
    pub fn objective_of_primal(&self) -> S {
        self.primal().iter().zip(&self.objective).map(|(&y, &c)| y * c).sum()
    }

    pub fn primal(&self) -> Vec<S> {
        let mut y = vec![S::zero(); self.n_vars];
        for (i, &bv) in self.basis.iter().enumerate() {
            if bv < self.n_vars {
                y[bv] = self.rhs[i].max_of(S::zero());
            }
        }
        y
    }

    /// Multipliers of the rows (the reduced costs of their slacks).
    pub fn row_duals(&self) -> Vec<S> {
        (0..self.rows.len()).map(|i| self.reduced[self.n_vars + i].max_of(S::zero())).collect()
    }
}

/// One-shot solve of `max c·y, A y <= b, y >= 0`. Returns `(value, y, row duals)`.
pub fn solve_packing<S: Scalar>(
    objective: &[S],
    rows: &[Vec<S>],
    rhs: &[S],
    max_pivots: usize,
) -> Result<(S, Vec<S>, Vec<S>)> {
    let mut t = PackingTableau::new(objective.to_vec());
    for (row, &b) in rows.iter().zip(rhs) {
        t.add_row(row, b)?;
    }
    t.solve(max_pivots)?;
    Ok((t.objective_value(), t.primal(), t.row_duals()))
}
