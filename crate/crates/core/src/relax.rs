//! Away-step Frank-Wolfe over `{eᵀx = s, 0 ≤ x ≤ e, Ax ≤ b}` for the linx and
//! factorization objectives, with a certified upper bound and KKT multipliers.

use alloc::vec;
use alloc::vec::Vec;

use crate::ddfact;
use crate::error::{Error, Result};
use crate::instance::{factorize, Factorization, Instance};
use crate::linx;
use crate::lp::{LinearProgram, Relation};
use crate::matrix::{dot, norm_inf, Mat};
use crate::scaling::ScalingVector;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 5000;
/// LP vertex entries this close to 0 or 1 are snapped.
const SNAP_TOL: f64 = 1e-9;
const VERTEX_EQ_TOL: f64 = 1e-12;
const LINE_SEARCH_ITERS: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Linx,
    Ddfact,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Linx => "linx",
            BoundKind::Ddfact => "ddfact",
        }
    }
}

/// The objective of one bound at a fixed scaling.
pub struct Objective<'a> {
    inst: &'a Instance,
    ups: &'a ScalingVector,
    kind: BoundKind,
    fac: Option<Factorization>,
}

impl<'a> Objective<'a> {
    pub fn new(inst: &'a Instance, kind: BoundKind, ups: &'a ScalingVector) -> Self {
        let fac = match kind {
            BoundKind::Ddfact => Some(factorize(inst)),
            BoundKind::Linx => None,
        };
        Objective { inst, ups, kind, fac }
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    /// Value and (generalized) gradient in `x`, `None` outside the domain.
    pub fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        match self.kind {
            BoundKind::Linx => linx::value_and_grad_x(self.inst, x, self.ups),
            BoundKind::Ddfact => ddfact::value_and_grad_x(self.inst, self.fac.as_ref()?, x, self.ups),
        }
    }

    /// Gradient of the objective in `ψ = log Υ` at `x`.
    pub fn grad_logups(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            BoundKind::Linx => linx::linx_grad_logups(self.inst, x, self.ups),
            BoundKind::Ddfact => {
                let fac = self.fac.as_ref().ok_or(Error::OutsideDomain)?;
                let g = ddfact::ddfact_grad_ups(self.inst, fac, x, self.ups)?;
                Ok(g.iter().zip(self.ups.ups()).map(|(gi, u)| gi * u).collect())
            }
        }
    }
}

/// Vertices of the feasible polytope with convex weights.
#[derive(Clone, Debug, Default)]
pub struct ActiveSet {
    pub vertices: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ActiveSet {
    fn single(v: Vec<f64>) -> Self {
        ActiveSet { vertices: vec![v], weights: vec![1.0] }
    }

    pub fn point(&self) -> Vec<f64> {
        let n = self.vertices.first().map_or(0, |v| v.len());
        let mut x = vec![0.0; n];
        for (v, &w) in self.vertices.iter().zip(&self.weights) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += w * vi;
            }
        }
        x
    }

    fn find(&self, v: &[f64]) -> Option<usize> {
        self.vertices
            .iter()
            .position(|u| u.iter().zip(v).all(|(a, b)| (a - b).abs() <= VERTEX_EQ_TOL))
    }

    fn add(&mut self, v: Vec<f64>, w: f64) {
        match self.find(&v) {
            Some(i) => self.weights[i] += w,
            None => {
                self.vertices.push(v);
                self.weights.push(w);
            }
        }
    }

    fn prune(&mut self) {
        let total: f64 = self.weights.iter().sum();
        let mut i = 0;
        while i < self.weights.len() {
            if self.weights[i] <= 1e-15 * total {
                self.weights.swap_remove(i);
                self.vertices.swap_remove(i);
            } else {
                i += 1;
            }
        }
        let total: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= total);
    }
}

/// Multipliers for `x ≥ 0` (υ), `x ≤ e` (ν), `eᵀx = s` (τ) and `Ax ≤ b` (π).
#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub upsilon: Vec<f64>,
    pub nu: Vec<f64>,
    pub tau: f64,
    pub pi: Vec<f64>,
    /// `‖g + υ − ν − Aᵀπ − τe‖_∞`
    pub stationarity: f64,
    /// `υᵀx + νᵀ(e−x) + πᵀ(b−Ax)`, the part of the bound above the objective value.
    pub complementarity: f64,
    /// `f(x) + υᵀx + νᵀ(e−x) + πᵀ(b−Ax) + ‖r‖₁`; valid for any multipliers of the right sign.
    pub dual_ub: f64,
    pub usable: bool,
}

#[derive(Clone, Debug)]
pub struct RelaxOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub warm_start: Option<ActiveSet>,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, warm_start: None }
    }
}

/// Why the Frank-Wolfe loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelaxStop {
    Converged,
    IterationLimit,
    /// The line search found no admissible positive step.
    Stalled,
    /// Rebuilding the iterate from the active set lost objective value.
    NonMonotone,
}

#[derive(Clone, Debug)]
pub struct RelaxationResult {
    pub x_star: Vec<f64>,
    pub value: f64,
    /// `value + fw_gap`
    pub valid_ub: f64,
    pub fw_gap: f64,
    pub gradient: Vec<f64>,
    pub duals: DualCertificate,
    pub iterations: usize,
    pub converged: bool,
    pub stop: RelaxStop,
    pub active_set: ActiveSet,
}

/// Maximizer of `gᵀv` over `{eᵀv = s, 0 ≤ v ≤ e, Av ≤ b}`.
///
/// Without side constraints this is the indicator of the `s` largest entries
/// (ties broken toward lower indices); otherwise a small LP is solved.
pub fn lmo(g: &[f64], s: usize, a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = g.len();
    if s > n {
        return Err(Error::Infeasible);
    }
    if a.rows() == 0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| g[j].partial_cmp(&g[i]).unwrap_or(core::cmp::Ordering::Equal).then(i.cmp(&j)));
        let mut v = vec![0.0; n];
        for &i in &order[..s] {
            v[i] = 1.0;
        }
        return Ok(v);
    }
    let mut lp = LinearProgram::new(g.to_vec());
    lp.add_row(vec![1.0; n], Relation::Eq, s as f64);
    for i in 0..n {
        let mut r = vec![0.0; n];
        r[i] = 1.0;
        lp.add_row(r, Relation::Le, 1.0);
    }
    for k in 0..a.rows() {
        lp.add_row(a.row(k).to_vec(), Relation::Le, b[k]);
    }
    let mut v = lp.solve()?.x;
    for vi in v.iter_mut() {
        if vi.abs() <= SNAP_TOL {
            *vi = 0.0;
        } else if (*vi - 1.0).abs() <= SNAP_TOL {
            *vi = 1.0;
        }
    }
    Ok(v)
}

fn inst_lmo(inst: &Instance, g: &[f64]) -> Result<Vec<f64>> {
    lmo(g, inst.s(), inst.a(), inst.b())
}

fn initial_active_set(inst: &Instance, obj: &Objective) -> Result<ActiveSet> {
    let v = inst_lmo(inst, &inst.c().diag())?;
    if obj.eval(&v).is_some() {
        return Ok(ActiveSet::single(v));
    }
    // average of ±e_i maximizers: strictly inside the box wherever the polytope allows
    let n = inst.n();
    let mut set = ActiveSet::default();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut g = vec![0.0; n];
            g[i] = sign;
            set.add(inst_lmo(inst, &g)?, 1.0);
        }
    }
    set.prune();
    if obj.eval(&set.point()).is_some() {
        Ok(set)
    } else {
        Err(Error::OutsideDomain)
    }
}

/// One-dimensional maximization of the concave `φ(t) = f(x + t·d)` on
/// `[0, t_max]` by root-finding on `φ'`; points outside the domain count
/// as a negative slope. Returns the step and the evaluation there.
fn line_search(obj: &Objective, x: &[f64], d: &[f64], t_max: f64, slope0: f64) -> Option<(f64, f64, Vec<f64>)> {
    let at = |t: f64| -> Option<(f64, Vec<f64>)> {
        let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
        obj.eval(&y)
    };
    let slope = |g: &[f64]| dot(g, d);
    let (mut lo, mut slo) = (0.0, slope0);
    let mut hi = t_max;
    let mut shi = match at(hi) {
        Some((v, g)) => {
            let sl = slope(&g);
            if sl >= 0.0 {
                return Some((hi, v, g));
            }
            Some(sl)
        }
        None => None,
    };
    let tol = 1e-15 * (1.0 + slope0.abs());
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    // Illinois: halve the stale endpoint's slope when the same side moves twice
    let mut last_side = 0i8;
    for _ in 0..LINE_SEARCH_ITERS {
        let t = match shi {
            Some(sh) => {
                let t = lo + (hi - lo) * slo / (slo - sh);
                if t > lo && t < hi {
                    t
                } else {
                    0.5 * (lo + hi)
                }
            }
            None => 0.5 * (lo + hi),
        };
        match at(t) {
            None => {
                hi = t;
                shi = None;
                last_side = 0;
            }
            Some((v, g)) => {
                let st = slope(&g);
                if best.as_ref().map_or(true, |b| v >= b.1) {
                    best = Some((t, v, g));
                }
                if st.abs() <= tol {
                    break;
                }
                if st > 0.0 {
                    lo = t;
                    slo = st;
                    if last_side == 1 {
                        if let Some(sh) = shi.as_mut() {
                            *sh *= 0.5;
                        }
                    }
                    last_side = 1;
                } else {
                    hi = t;
                    shi = Some(st);
                    if last_side == -1 {
                        slo *= 0.5;
                    }
                    last_side = -1;
                }
            }
        }
        if hi - lo <= 1e-16 * t_max {
            break;
        }
    }
    best
}

/// Maximizes the chosen bound's objective over the relaxed feasible set.
pub fn solve_relaxation(inst: &Instance, bound: BoundKind, ups: &ScalingVector, opts: &RelaxOptions) -> Result<RelaxationResult> {
    if ups.len() != inst.n() {
        return Err(Error::DimensionMismatch("Υ must have length n".into()));
    }
    let obj = Objective::new(inst, bound, ups);
    let mut active = match &opts.warm_start {
        Some(ws) if !ws.vertices.is_empty() && obj.eval(&ws.point()).is_some() => ws.clone(),
        _ => initial_active_set(inst, &obj)?,
    };
    let mut x = active.point();
    let (mut value, mut g) = obj.eval(&x).ok_or(Error::OutsideDomain)?;
    let mut iterations = 0;
    let mut gap;
    let mut stop = RelaxStop::Converged;
    loop {
        let v_fw = inst_lmo(inst, &g)?;
        let gx = dot(&g, &x);
        gap = (dot(&g, &v_fw) - gx).max(0.0);
        if gap <= opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            stop = RelaxStop::IterationLimit;
            break;
        }
        iterations += 1;
        let (ia, away_val) = active
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (i, dot(&g, v)))
            .fold((0, f64::INFINITY), |acc, it| if it.1 < acc.1 { it } else { acc });
        let away_gap = gx - away_val;
        let fw_step = gap >= away_gap || active.vertices.len() == 1;
        let (d, t_max): (Vec<f64>, f64) = if fw_step {
            (v_fw.iter().zip(&x).map(|(v, xi)| v - xi).collect(), 1.0)
        } else {
            let w = active.weights[ia];
            (x.iter().zip(&active.vertices[ia]).map(|(xi, v)| xi - v).collect(), w / (1.0 - w))
        };
        let slope0 = dot(&g, &d);
        let t = match line_search(&obj, &x, &d, t_max, slope0) {
            Some((t, _, _)) if t > 0.0 => t,
            _ => {
                stop = RelaxStop::Stalled;
                break;
            }
        };
        if fw_step {
            active.weights.iter_mut().for_each(|w| *w *= 1.0 - t);
            active.add(v_fw, t);
        } else {
            active.weights.iter_mut().for_each(|w| *w *= 1.0 + t);
            active.weights[ia] -= t;
            if t >= t_max {
                active.weights[ia] = 0.0;
            }
        }
        active.prune();
        let xn = active.point();
        match obj.eval(&xn) {
            // rounding in the log-determinant can cost a few ulps near the optimum
            Some((vn, gn)) if vn >= value - 1e-10 * (1.0 + value.abs()) => {
                x = xn;
                value = vn;
                g = gn;
            }
            _ => {
                stop = RelaxStop::NonMonotone;
                break;
            }
        }
    }
    let duals = certificate(inst, &x, value, &g)?;
    Ok(RelaxationResult {
        valid_ub: value + gap,
        x_star: x,
        value,
        fw_gap: gap,
        gradient: g,
        duals,
        iterations,
        converged: gap <= opts.tol,
        stop,
        active_set: active,
    })
}

/// Recomputes the certificate at the final iterate of `rr`.
pub fn recover_duals(inst: &Instance, bound: BoundKind, ups: &ScalingVector, rr: &RelaxationResult) -> Result<DualCertificate> {
    let obj = Objective::new(inst, bound, ups);
    let (value, g) = obj.eval(&rr.x_star).ok_or(Error::OutsideDomain)?;
    let mut cert = certificate(inst, &rr.x_star, value, &g)?;
    cert.usable = cert.usable && rr.converged;
    Ok(cert)
}

/// Closed-form multipliers from the sorted gradient when there are no side
/// constraints.
pub fn mesp_duals(g: &[f64], s: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| g[j].partial_cmp(&g[i]).unwrap_or(core::cmp::Ordering::Equal).then(i.cmp(&j)));
    let tau = g[order[s - 1]];
    let mut nu = vec![0.0; n];
    for &i in &order[..s] {
        nu[i] = g[i] - tau;
    }
    let upsilon = (0..n).map(|i| nu[i] + tau - g[i]).collect();
    (upsilon, nu, tau)
}

/// Multipliers minimizing the bound `υᵀx + νᵀ(e−x) + πᵀ(b−Ax)` subject to
/// exact stationarity `ν − υ + Aᵀπ + τe = g` and signs; the LP dual of the
/// linear maximization oracle at `x`.
fn lp_duals(inst: &Instance, x: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64, Vec<f64>)> {
    let n = inst.n();
    let m = inst.m();
    let slack: Vec<f64> = inst.constraint_residuals(x).iter().map(|r| (-r).max(0.0)).collect();
    // variables: υ (n), ν (n), π (m), τ⁺, τ⁻
    let nv = 2 * n + m + 2;
    let mut obj = vec![0.0; nv];
    for i in 0..n {
        obj[i] = -x[i].clamp(0.0, 1.0);
        obj[n + i] = -(1.0 - x[i]).clamp(0.0, 1.0);
    }
    for k in 0..m {
        obj[2 * n + k] = -slack[k];
    }
    let mut lp = LinearProgram::new(obj);
    for i in 0..n {
        let mut r = vec![0.0; nv];
        r[i] = -1.0;
        r[n + i] = 1.0;
        for k in 0..m {
            r[2 * n + k] = inst.a()[(k, i)];
        }
        r[2 * n + m] = 1.0;
        r[2 * n + m + 1] = -1.0;
        lp.add_row(r, Relation::Eq, g[i]);
    }
    let z = lp.solve()?.x;
    Ok((z[..n].to_vec(), z[n..2 * n].to_vec(), z[2 * n + m] - z[2 * n + m + 1], z[2 * n..2 * n + m].to_vec()))
}

pub(crate) fn certificate(inst: &Instance, x: &[f64], value: f64, g: &[f64]) -> Result<DualCertificate> {
    let n = inst.n();
    let (upsilon, nu, tau, pi) = if inst.m() == 0 {
        let (u, v, t) = mesp_duals(g, inst.s());
        (u, v, t, Vec::new())
    } else {
        lp_duals(inst, x, g)?
    };
    let atpi = inst.a().tr_matvec(&pi);
    let r: Vec<f64> = (0..n)
        .map(|i| g[i] + upsilon[i] - nu[i] - tau - if inst.m() > 0 { atpi[i] } else { 0.0 })
        .collect();
    let slack = inst.constraint_residuals(x);
    let complementarity = dot(&upsilon, x)
        + (0..n).map(|i| nu[i] * (1.0 - x[i])).sum::<f64>()
        + pi.iter().zip(&slack).map(|(p, r)| p * (-r).max(0.0)).sum::<f64>();
    let r1: f64 = r.iter().map(|v| v.abs()).sum();
    let stationarity = norm_inf(&r);
    Ok(DualCertificate {
        upsilon,
        nu,
        tau,
        pi,
        stationarity,
        complementarity,
        dual_ub: value + complementarity + r1,
        usable: stationarity <= 1e-7 * (1.0 + norm_inf(g)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lmo_examples() {
        assert_eq!(lmo(&[3.0, 1.0, 2.0], 2, &Mat::zeros(0, 3), &[]).unwrap(), vec![1.0, 0.0, 1.0]);
        let v = lmo(&[1.0, 0.0], 1, &Mat::from_rows(&[[1.0, 0.0]]), &[0.5]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12);
        let v = lmo(&[0.0; 4], 2, &Mat::from_rows(&[[1.0, 1.0, 0.0, 0.0]]), &[1.0]).unwrap();
        assert!((v.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mesp_dual_examples() {
        let (u, v, t) = mesp_duals(&[3.0, 2.0, 1.0], 2);
        assert_eq!((u, v, t), (vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], 2.0));
        let (u, v, t) = mesp_duals(&[0.7; 4], 3);
        assert!(u.iter().chain(&v).all(|&z| z == 0.0) && t == 0.7);
    }

    #[test]
    fn identity_linx_is_flat() {
        let inst = Instance::mesp(Mat::identity(2), 1).unwrap();
        let rr = solve_relaxation(&inst, BoundKind::Linx, &ScalingVector::ones(2), &RelaxOptions::default()).unwrap();
        assert!(rr.value.abs() < 1e-12 && rr.valid_ub <= 1e-8);
    }

    #[test]
    fn ddfact_diag_dominates_optimum() {
        let inst = Instance::mesp(Mat::from_diag(&[2.0, 3.0, 5.0]), 2).unwrap();
        let rr = solve_relaxation(&inst, BoundKind::Ddfact, &ScalingVector::ones(3), &RelaxOptions::default()).unwrap();
        assert!(rr.converged);
        assert!(rr.valid_ub >= libm::log(15.0) - 1e-12);
        assert!((rr.duals.dual_ub - rr.valid_ub).abs() < 1e-9);
    }

    #[test]
    fn small_cmesp_certificate() {
        let c = Mat::from_rows(&[
            [2.0, 0.4, 0.1, 0.0],
            [0.4, 1.5, 0.3, 0.2],
            [0.1, 0.3, 1.0, 0.1],
            [0.0, 0.2, 0.1, 3.0],
        ]);
        let inst = Instance::new(c, 2, Mat::from_rows(&[[1.0, 0.0, 0.0, 1.0]]), vec![1.0]).unwrap();
        for kind in [BoundKind::Linx, BoundKind::Ddfact] {
            let rr = solve_relaxation(&inst, kind, &ScalingVector::ones(4), &RelaxOptions::default()).unwrap();
            assert!(rr.converged);
            assert!(inst.in_polytope(&rr.x_star, 1e-9));
            let d = &rr.duals;
            assert!(d.stationarity <= 1e-6);
            assert!(d.upsilon.iter().chain(&d.nu).chain(&d.pi).all(|&z| z >= 0.0));
            assert!((d.dual_ub - rr.valid_ub).abs() < 1e-8);
        }
    }
}
