//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Sized for the linear maximization oracle over
//! `{eᵀx = s, 0 ≤ x ≤ e, Ax ≤ b}` with a handful of side constraints and for
//! fitting dual multipliers; nothing here is tuned for large sparse models.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-10;
const COST_EPS: f64 = 1e-12;
const FEAS_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<f64>,
    rel: Relation,
    rhs: f64,
}

/// `max cᵀx` subject to the added rows and `x ≥ 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    n: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram { n: objective.len(), objective, rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.n, "row length must match variable count");
        self.rows.push(Row { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    /// rows × (cols + 1); last column is the right-hand side
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    artificial_start: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let n = lp.n;
        // normalize to nonnegative right-hand sides
        let rows: Vec<Row> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    let rel = match r.rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    Row { coeffs: r.coeffs.iter().map(|a| -a).collect(), rel, rhs: -r.rhs }
                } else {
                    r.clone()
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.rel != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.rel != Relation::Le).count();
        let cols = n + n_slack + n_art;
        let artificial_start = n + n_slack;
        let mut t = vec![vec![0.0; cols + 1]; m];
        let mut basis = vec![0; m];
        let mut slack = n;
        let mut art = artificial_start;
        for (i, r) in rows.iter().enumerate() {
            t[i][..n].copy_from_slice(&r.coeffs);
            t[i][cols] = r.rhs;
            match r.rel {
                Relation::Le => {
                    t[i][slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    t[i][slack] = -1.0;
                    slack += 1;
                    t[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    t[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Tableau { t, basis, cols, artificial_start }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.cols + 1;
        let p = self.t[pr][pc];
        for j in 0..width {
            self.t[pr][j] /= p;
        }
        let prow = self.t[pr].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == pr {
                continue;
            }
            let f = row[pc];
            if f == 0.0 {
                continue;
            }
            for j in 0..width {
                row[j] -= f * prow[j];
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Maximizes `cost · z` over the columns `< col_limit` with Bland's rule.
    fn optimize(&mut self, cost: &[f64], col_limit: usize) -> Result<()> {
        let max_iter = 50 * (self.cols + self.t.len() + 10);
        for _ in 0..max_iter {
            // reduced costs d_j = c_B B⁻¹ A_j − c_j (negative: improving)
            let mut entering = None;
            for j in 0..col_limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = -cost[j];
                for (i, &bv) in self.basis.iter().enumerate() {
                    d += cost[bv] * self.t[i][j];
                }
                let scale = 1.0 + cost[j].abs();
                if d < -COST_EPS * scale {
                    entering = Some(j);
                    break;
                }
            }
            let Some(pc) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][pc];
                if a > PIVOT_EPS {
                    let ratio = self.t[i][self.cols] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-13 || (ratio <= lr + 1e-13 && self.basis[i] < self.basis[li]) {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((pr, _)) = leave else { return Err(Error::Unbounded) };
            self.pivot(pr, pc);
        }
        Err(Error::IterationLimit { iterations: max_iter, residual: f64::NAN })
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let n = lp.n;
        if self.artificial_start < self.cols {
            let mut phase1 = vec![0.0; self.cols];
            for c in phase1.iter_mut().skip(self.artificial_start) {
                *c = -1.0;
            }
            self.optimize(&phase1, self.cols)?;
            let infeas: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &bv)| bv >= self.artificial_start)
                .map(|(i, _)| self.t[i][self.cols])
                .sum();
            let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            if infeas > FEAS_EPS * scale {
                return Err(Error::Infeasible);
            }
            // drive remaining artificials out of the basis, dropping redundant rows
            let mut i = 0;
            while i < self.t.len() {
                if self.basis[i] >= self.artificial_start {
                    let pc = (0..self.artificial_start).find(|&j| self.t[i][j].abs() > PIVOT_EPS);
                    match pc {
                        Some(j) => {
                            self.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            self.t.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }
        let mut cost = vec![0.0; self.cols];
        cost[..n].copy_from_slice(&lp.objective);
        self.optimize(&cost, self.artificial_start)?;
        let mut x = vec![0.0; n];
        for (i, &bv) in self.basis.iter().enumerate() {
            if bv < n {
                x[bv] = self.t[i][self.cols].max(0.0);
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(a, c)| a * c).sum();
        Ok(LpSolution { x, objective })
    }
}
