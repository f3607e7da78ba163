//! Exhaustive enumeration of all `s`-subsets for small instances.
//!
//! Subsets are visited in lexicographic order while a Cholesky factor of the
//! current prefix is extended one row at a time. A prefix whose pivot vanishes
//! is singular, and so is every superset, so that subtree is skipped; nothing
//! else is pruned.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Largest `n` accepted by the enumerator.
pub const MAX_N: usize = 24;
/// Values within this distance of the optimum count as optimal.
pub const TIE_TOL: f64 = 1e-10;
const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub opt_value: f64,
    /// Zero-based index sets attaining `opt_value` within [`TIE_TOL`].
    pub opt_sets: Vec<Vec<usize>>,
    /// Feasible subsets with nonsingular `C[S,S]`.
    pub feasible_count: u64,
}

struct Walker<'a, F: FnMut(&[usize], f64)> {
    inst: &'a Instance,
    set: Vec<usize>,
    /// Row `k` holds the Cholesky row of the k-th chosen index (length k+1 used).
    chol: Vec<Vec<f64>>,
    ldet: Vec<f64>,
    lhs: Vec<Vec<f64>>,
    visit: F,
}

impl<'a, F: FnMut(&[usize], f64)> Walker<'a, F> {
    fn push(&mut self, j: usize) -> bool {
        let c = self.inst.c();
        let k = self.set.len();
        let mut row = vec![0.0; k + 1];
        for t in 0..k {
            let mut v = c[(j, self.set[t])];
            for u in 0..t {
                v -= row[u] * self.chol[t][u];
            }
            row[t] = v / self.chol[t][t];
        }
        let d = c[(j, j)] - row[..k].iter().map(|v| v * v).sum::<f64>();
        let floor = f64::EPSILON * self.inst.n() as f64 * c[(j, j)].abs().max(f64::MIN_POSITIVE);
        if !(d > floor) {
            return false;
        }
        row[k] = libm::sqrt(d);
        let prev = self.ldet.last().copied().unwrap_or(0.0);
        self.ldet.push(prev + libm::log(d));
        if k < self.chol.len() {
            self.chol[k] = row;
        } else {
            self.chol.push(row);
        }
        let base = self.lhs.last().cloned().unwrap_or_else(|| vec![0.0; self.inst.m()]);
        let col: Vec<f64> = (0..self.inst.m()).map(|i| base[i] + self.inst.a()[(i, j)]).collect();
        self.lhs.push(col);
        self.set.push(j);
        true
    }

    fn pop(&mut self) {
        self.set.pop();
        self.ldet.pop();
        self.lhs.pop();
    }

    fn walk(&mut self, start: usize) {
        let (n, s) = (self.inst.n(), self.inst.s());
        if self.set.len() == s {
            let lhs = self.lhs.last().map(|v| v.as_slice()).unwrap_or(&[]);
            if lhs.iter().zip(self.inst.b()).all(|(l, b)| *l <= b + CONSTRAINT_TOL) {
                let v = *self.ldet.last().unwrap();
                (self.visit)(&self.set, v);
            }
            return;
        }
        let remaining = s - self.set.len();
        for j in start..=(n - remaining) {
            if self.push(j) {
                self.walk(j + 1);
                self.pop();
            }
        }
    }
}

/// Calls `visit(S, ldet C[S,S])` for every feasible `s`-subset with
/// nonsingular `C[S,S]`. With `leading = Some(i)` only subsets whose smallest
/// index is `i` are visited, which lets callers split the work.
pub fn for_each_feasible(inst: &Instance, leading: Option<usize>, visit: impl FnMut(&[usize], f64)) -> Result<()> {
    if inst.n() > MAX_N {
        return Err(Error::TooLarge { n: inst.n(), cap: MAX_N });
    }
    let mut w = Walker { inst, set: Vec::new(), chol: Vec::new(), ldet: Vec::new(), lhs: Vec::new(), visit };
    match leading {
        None => w.walk(0),
        Some(i) => {
            if i + inst.s() <= inst.n() && w.push(i) {
                w.walk(i + 1);
            }
        }
    }
    Ok(())
}

fn collect(inst: &Instance, leading: Option<usize>) -> Result<(f64, Vec<(Vec<usize>, f64)>, u64)> {
    let mut best = f64::NEG_INFINITY;
    let mut near: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut count = 0u64;
    for_each_feasible(inst, leading, |set, v| {
        count += 1;
        if v > best + TIE_TOL {
            best = v;
            near.retain(|(_, u)| *u >= best - TIE_TOL);
        }
        if v >= best - TIE_TOL {
            near.push((set.to_vec(), v));
        }
    })?;
    Ok((best, near, count))
}

fn finish(best: f64, near: Vec<(Vec<usize>, f64)>, count: u64) -> Result<OracleResult> {
    if count == 0 {
        return Err(Error::NoFeasibleSolution);
    }
    let opt_sets = near.into_iter().filter(|(_, v)| *v >= best - TIE_TOL).map(|(s, _)| s).collect();
    Ok(OracleResult { opt_value: best, opt_sets, feasible_count: count })
}

/// Exact optimum over all feasible `s`-subsets.
pub fn brute_force_opt(inst: &Instance) -> Result<OracleResult> {
    let (best, near, count) = collect(inst, None)?;
    finish(best, near, count)
}

/// The part of the enumeration whose smallest index is `leading`; results of
/// all leading indices combine with [`merge`].
pub fn brute_force_partial(inst: &Instance, leading: usize) -> Result<Option<OracleResult>> {
    let (best, near, count) = collect(inst, Some(leading))?;
    if count == 0 {
        return Ok(None);
    }
    finish(best, near, count).map(Some)
}

/// Combines partial results by maximum value.
pub fn merge(parts: impl IntoIterator<Item = OracleResult>) -> Result<OracleResult> {
    let parts: Vec<OracleResult> = parts.into_iter().collect();
    let best = parts.iter().map(|p| p.opt_value).fold(f64::NEG_INFINITY, f64::max);
    let count = parts.iter().map(|p| p.feasible_count).sum();
    let mut sets: Vec<Vec<usize>> = parts
        .into_iter()
        .filter(|p| p.opt_value >= best - TIE_TOL)
        .flat_map(|p| p.opt_sets)
        .collect();
    sets.sort();
    if count == 0 {
        return Err(Error::NoFeasibleSolution);
    }
    Ok(OracleResult { opt_value: best, opt_sets: sets, feasible_count: count })
}
