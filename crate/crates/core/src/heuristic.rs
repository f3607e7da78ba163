//! Lower bounds from feasible solutions: a greedy construction followed by
//! 1-swap local search.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{LinearProgram, Relation};
use crate::spectral::inverse_pd;

/// Smallest log-det gain that counts as an improving swap.
pub const IMPROVE_TOL: f64 = 1e-10;
const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct IncumbentSolution {
    /// Sorted zero-based indices.
    pub set: Vec<usize>,
    pub x: Vec<f64>,
    /// `ldet C[S,S]`, `-∞` if the submatrix is singular.
    pub value: f64,
    /// `Ax ≤ b` holds within 1e-9.
    pub feasible: bool,
}

impl IncumbentSolution {
    pub fn from_set(inst: &Instance, set: &[usize]) -> Self {
        let mut set = set.to_vec();
        set.sort_unstable();
        let mut x = vec![0.0; inst.n()];
        for &i in &set {
            x[i] = 1.0;
        }
        let value = inst.ldet_subset(&set).unwrap_or(f64::NEG_INFINITY);
        let feasible = inst.satisfies_side_constraints(&x, CONSTRAINT_TOL);
        IncumbentSolution { set, x, value, feasible }
    }
}

/// Whether `x_j = 1 (j ∈ ones)` extends to a point of the relaxation polytope.
fn completable(inst: &Instance, ones: &[usize]) -> bool {
    if inst.m() == 0 {
        return true;
    }
    let n = inst.n();
    let mut lp = LinearProgram::new(vec![0.0; n]);
    lp.add_row(vec![1.0; n], Relation::Eq, inst.s() as f64);
    for i in 0..n {
        let mut r = vec![0.0; n];
        r[i] = 1.0;
        let rel = if ones.contains(&i) { Relation::Eq } else { Relation::Le };
        lp.add_row(r, rel, 1.0);
    }
    for i in 0..inst.m() {
        lp.add_row(inst.a().row(i).to_vec(), Relation::Le, inst.b()[i]);
    }
    lp.solve().is_ok()
}

fn violation(inst: &Instance, lhs: &[f64]) -> f64 {
    lhs.iter().zip(inst.b()).map(|(l, b)| (l - b).max(0.0)).sum()
}

fn lhs_of(inst: &Instance, set: &[usize]) -> Vec<f64> {
    (0..inst.m()).map(|r| set.iter().map(|&j| inst.a()[(r, j)]).sum()).collect()
}

/// Pivoted-Cholesky greedy: repeatedly add the index with the largest
/// conditional variance, skipping indices after which the side constraints
/// can no longer be met by the relaxation. A final swap repair lowers any
/// remaining constraint violation.
pub fn greedy_construct(inst: &Instance) -> Result<IncumbentSolution> {
    let (n, s) = (inst.n(), inst.s());
    let c = inst.c();
    let mut resid: Vec<f64> = c.diag();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut set: Vec<usize> = Vec::with_capacity(s);
    for _ in 0..s {
        let mut order: Vec<usize> = (0..n).filter(|i| !set.contains(i)).collect();
        order.sort_by(|&a, &b| resid[b].total_cmp(&resid[a]).then(a.cmp(&b)));
        let pick = order
            .iter()
            .copied()
            .find(|&j| {
                let mut trial = set.clone();
                trial.push(j);
                completable(inst, &trial)
            })
            .unwrap_or(order[0]);
        let piv = resid[pick];
        let mut g = vec![0.0; n];
        if piv > 0.0 {
            let r = libm::sqrt(piv);
            for i in 0..n {
                let mut v = c[(i, pick)];
                for col in &cols {
                    v -= col[i] * col[pick];
                }
                g[i] = v / r;
            }
        }
        for i in 0..n {
            resid[i] -= g[i] * g[i];
        }
        cols.push(g);
        set.push(pick);
    }
    repair(inst, set)
}

/// Swap toward feasibility, preferring larger log-det among equally good moves.
fn repair(inst: &Instance, mut set: Vec<usize>) -> Result<IncumbentSolution> {
    let n = inst.n();
    let mut lhs = lhs_of(inst, &set);
    let mut viol = violation(inst, &lhs);
    let mut budget = n * inst.s() + 1;
    while viol > CONSTRAINT_TOL && budget > 0 {
        budget -= 1;
        let mut best: Option<(f64, f64, usize, usize)> = None;
        for (pos, &i) in set.iter().enumerate() {
            for j in (0..n).filter(|j| !set.contains(j)) {
                let trial_lhs: Vec<f64> =
                    (0..inst.m()).map(|r| lhs[r] - inst.a()[(r, i)] + inst.a()[(r, j)]).collect();
                let v = violation(inst, &trial_lhs);
                if v >= viol - CONSTRAINT_TOL {
                    continue;
                }
                let mut trial = set.clone();
                trial[pos] = j;
                let val = inst.ldet_subset(&trial).unwrap_or(f64::NEG_INFINITY);
                let better = match best {
                    None => true,
                    Some((bv, bval, _, _)) => v < bv - CONSTRAINT_TOL || (v <= bv + CONSTRAINT_TOL && val > bval),
                };
                if better {
                    best = Some((v, val, pos, j));
                }
            }
        }
        match best {
            Some((v, _, pos, j)) => {
                set[pos] = j;
                lhs = lhs_of(inst, &set);
                viol = v;
            }
            None => break,
        }
    }
    Ok(IncumbentSolution::from_set(inst, &set))
}

/// Best-improvement 1-swap search that keeps `Ax ≤ b`. Infeasible starts are
/// returned unchanged.
pub fn local_search(inst: &Instance, start: &IncumbentSolution) -> IncumbentSolution {
    if !start.feasible {
        return start.clone();
    }
    let n = inst.n();
    let c = inst.c();
    let mut cur = start.clone();
    loop {
        let lhs = lhs_of(inst, &cur.set);
        let outside: Vec<usize> = (0..n).filter(|j| !cur.set.contains(j)).collect();
        let keeps = |i: usize, j: usize| {
            (0..inst.m()).all(|r| lhs[r] - inst.a()[(r, i)] + inst.a()[(r, j)] <= inst.b()[r] + CONSTRAINT_TOL)
        };
        let mut best: Option<(f64, usize, usize)> = None;
        match inverse_pd(&c.select(&cur.set, &cur.set)) {
            Ok(p) => {
                // det(S − i + j)/det(S) = d_j·P_ii + (P u_j)_i²
                for &j in &outside {
                    let u: Vec<f64> = cur.set.iter().map(|&k| c[(k, j)]).collect();
                    let w = p.matvec(&u);
                    let d = c[(j, j)] - u.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
                    for (pos, &i) in cur.set.iter().enumerate() {
                        let ratio = d * p[(pos, pos)] + w[pos] * w[pos];
                        if !(ratio > 0.0) || !keeps(i, j) {
                            continue;
                        }
                        let gain = libm::log(ratio);
                        if gain > IMPROVE_TOL && best.map_or(true, |(g, _, _)| gain > g) {
                            best = Some((gain, pos, j));
                        }
                    }
                }
            }
            Err(_) => {
                for &j in &outside {
                    for (pos, &i) in cur.set.iter().enumerate() {
                        if !keeps(i, j) {
                            continue;
                        }
                        let mut trial = cur.set.clone();
                        trial[pos] = j;
                        if let Some(v) = inst.ldet_subset(&trial) {
                            if best.map_or(true, |(g, _, _)| v > g) {
                                best = Some((v, pos, j));
                            }
                        }
                    }
                }
            }
        }
        let Some((_, pos, j)) = best else { break };
        let mut trial = cur.set.clone();
        trial[pos] = j;
        let next = IncumbentSolution::from_set(inst, &trial);
        if !(next.value > cur.value + IMPROVE_TOL) || !next.feasible {
            break;
        }
        cur = next;
    }
    cur
}

/// Greedy followed by local search; fails when no feasible solution was found.
pub fn incumbent(inst: &Instance) -> Result<IncumbentSolution> {
    let g = greedy_construct(inst)?;
    let best = local_search(inst, &g);
    if !best.feasible || !best.value.is_finite() {
        return Err(Error::NoFeasibleSolution);
    }
    Ok(best)
}
