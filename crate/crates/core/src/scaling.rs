//! Scaling vectors and their optimization: BFGS on `ψ = log Υ` for
//! g-scaling and a safeguarded Newton iteration on the scalar o-scaling factor.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::linx;
use crate::matrix::{dot, norm_inf, Mat};
use crate::relax::{solve_relaxation, ActiveSet, BoundKind, Objective, RelaxOptions, RelaxationResult, DEFAULT_TOL};

/// Positive scaling vector `Υ` kept together with `ψ = log Υ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingVector {
    ups: Vec<f64>,
    psi: Vec<f64>,
}

impl ScalingVector {
    pub fn new(ups: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = ups.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositiveScaling { index, value });
        }
        let psi = ups.iter().map(|&u| libm::log(u)).collect();
        Ok(ScalingVector { ups, psi })
    }

    pub fn from_psi(psi: Vec<f64>) -> Result<Self> {
        let ups: Vec<f64> = psi.iter().map(|&p| libm::exp(p)).collect();
        if let Some((index, &value)) = ups.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositiveScaling { index, value });
        }
        Ok(ScalingVector { ups, psi })
    }

    pub fn ones(n: usize) -> Self {
        ScalingVector { ups: vec![1.0; n], psi: vec![0.0; n] }
    }

    /// `γ·e`
    pub fn uniform(n: usize, gamma: f64) -> Result<Self> {
        ScalingVector::new(vec![gamma; n])
    }

    pub fn len(&self) -> usize {
        self.ups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ups.is_empty()
    }

    pub fn ups(&self) -> &[f64] {
        &self.ups
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Entries restricted to `idx`, in order.
    pub fn select(&self, idx: &[usize]) -> Self {
        ScalingVector {
            ups: idx.iter().map(|&i| self.ups[i]).collect(),
            psi: idx.iter().map(|&i| self.psi[i]).collect(),
        }
    }
}

/// Subgradient of `z(ψ)`: the objective's gradient in `ψ` at the relaxation
/// maximizer.
pub fn subgrad_z(inst: &Instance, bound: BoundKind, ups: &ScalingVector, rr: &RelaxationResult) -> Result<Vec<f64>> {
    if !rr.converged {
        return Err(Error::NotConverged { gap: rr.fw_gap, tol: DEFAULT_TOL });
    }
    Objective::new(inst, bound, ups).grad_logups(&rr.x_star)
}

#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub psi: Vec<f64>,
    pub z: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BfgsStop {
    Stationary,
    StepLimit,
    LineSearchFailed,
}

#[derive(Clone, Debug)]
pub struct BfgsOptions {
    pub max_steps: usize,
    /// Stop once `‖∇z(ψ)‖_∞` drops below this.
    pub grad_tol: f64,
    pub relax: RelaxOptions,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions { max_steps: DEFAULT_MAX_BFGS, grad_tol: 1e-6, relax: RelaxOptions::default() }
    }
}

pub const DEFAULT_MAX_BFGS: usize = 10;
pub const DEFAULT_DERIV_TOL: f64 = 1e-10;
const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const WOLFE_MAX_TRIALS: usize = 30;
const CURVATURE_MIN: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct BfgsResult {
    /// Best scaling on the trace.
    pub ups: ScalingVector,
    pub z: f64,
    pub relax: RelaxationResult,
    pub trace: Vec<TraceEntry>,
    pub stop: BfgsStop,
}

struct ZEval {
    z: f64,
    grad: Vec<f64>,
    rr: RelaxationResult,
}

fn eval_z(inst: &Instance, bound: BoundKind, psi: &[f64], opts: &RelaxOptions, warm: Option<&ActiveSet>) -> Result<ZEval> {
    let ups = ScalingVector::from_psi(psi.to_vec())?;
    let mut o = opts.clone();
    if let Some(w) = warm {
        o.warm_start = Some(w.clone());
    }
    let rr = solve_relaxation(inst, bound, &ups, &o)?;
    let grad = Objective::new(inst, bound, &ups).grad_logups(&rr.x_star)?;
    Ok(ZEval { z: rr.valid_ub, grad, rr })
}

/// Minimizes `ψ ↦ z(exp ψ)` by BFGS with a weak-Wolfe bracketing line search.
/// Every trial point re-solves the relaxation, warm-started from the last
/// active set. The best point on the trace is returned, so the result never
/// exceeds the starting bound.
pub fn bfgs_optimize_scaling(
    inst: &Instance,
    bound: BoundKind,
    ups0: &ScalingVector,
    opts: &BfgsOptions,
) -> Result<BfgsResult> {
    let n = inst.n();
    if ups0.len() != n {
        return Err(Error::DimensionMismatch("Υ must have length n".into()));
    }
    let mut psi = ups0.psi().to_vec();
    let mut cur = eval_z(inst, bound, &psi, &opts.relax, opts.relax.warm_start.as_ref())?;
    let mut trace = vec![TraceEntry { psi: psi.clone(), z: cur.z, grad_norm: norm_inf(&cur.grad) }];
    let mut best = (psi.clone(), cur.z, cur.rr.clone());
    let mut h = Mat::identity(n);
    let mut stop = BfgsStop::StepLimit;
    for step in 0..opts.max_steps {
        if norm_inf(&cur.grad) <= opts.grad_tol {
            stop = BfgsStop::Stationary;
            break;
        }
        let mut p: Vec<f64> = h.matvec(&cur.grad).iter().map(|v| -v).collect();
        let mut slope = dot(&cur.grad, &p);
        if !(slope < 0.0) {
            h = Mat::identity(n);
            p = cur.grad.iter().map(|v| -v).collect();
            slope = dot(&cur.grad, &p);
        }
        // weak Wolfe bracketing
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..WOLFE_MAX_TRIALS {
            let trial: Vec<f64> = psi.iter().zip(&p).map(|(a, b)| a + alpha * b).collect();
            let ev = match eval_z(inst, bound, &trial, &opts.relax, Some(&cur.rr.active_set)) {
                Ok(ev) => ev,
                Err(Error::NonPositiveScaling { .. }) => {
                    hi = alpha;
                    alpha = 0.5 * (lo + hi);
                    continue;
                }
                Err(e) => return Err(e),
            };
            if ev.z < best.1 {
                best = (trial.clone(), ev.z, ev.rr.clone());
            }
            if ev.z > cur.z + WOLFE_C1 * alpha * slope {
                hi = alpha;
            } else if dot(&ev.grad, &p) < WOLFE_C2 * slope {
                lo = alpha;
            } else {
                accepted = Some((trial, ev));
                break;
            }
            alpha = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
        }
        let Some((next_psi, next)) = accepted else {
            stop = BfgsStop::LineSearchFailed;
            break;
        };
        let sv: Vec<f64> = next_psi.iter().zip(&psi).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let ys = dot(&yv, &sv);
        if ys > CURVATURE_MIN {
            if step == 0 {
                h = Mat::identity(n).scale(ys / dot(&yv, &yv));
            }
            bfgs_update(&mut h, &sv, &yv, ys);
        }
        psi = next_psi;
        cur = next;
        trace.push(TraceEntry { psi: psi.clone(), z: cur.z, grad_norm: norm_inf(&cur.grad) });
    }
    if stop == BfgsStop::StepLimit && norm_inf(&cur.grad) <= opts.grad_tol {
        stop = BfgsStop::Stationary;
    }
    let (bpsi, bz, brr) = best;
    Ok(BfgsResult { ups: ScalingVector::from_psi(bpsi)?, z: bz, relax: brr, trace, stop })
}

/// Inverse-Hessian update `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`.
fn bfgs_update(h: &mut Mat, s: &[f64], y: &[f64], ys: f64) {
    let n = s.len();
    let rho = 1.0 / ys;
    let hy = h.matvec(y);
    let yhy = dot(y, &hy);
    let upd = Mat::from_fn(n, n, |i, j| {
        h[(i, j)] - rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j]
    });
    *h = upd;
    h.symmetrize();
}

#[derive(Clone, Debug)]
pub struct OScaling {
    pub gamma: f64,
    pub z: f64,
    /// `dz/dγ` at the returned point.
    pub derivative: f64,
    pub iterations: usize,
    /// Set for the factorization bound, whose value does not depend on γ.
    pub scale_invariant: bool,
    pub relax: RelaxationResult,
}

const NEWTON_MAX_ITER: usize = 100;
const BRACKET_TOL: f64 = 1e-13;

/// Newton's method on `ψ = log γ` for `min_γ z(γe)` with a bisection
/// safeguard once the minimizer is bracketed. Stops when `|dz/dγ| < deriv_tol`
/// or the bracket has collapsed. The derivative is only as accurate as the
/// relaxation solves, so `relax.tol` should sit well below `deriv_tol`.
pub fn newton_oscaling(
    inst: &Instance,
    bound: BoundKind,
    gamma0: f64,
    deriv_tol: f64,
    relax: &RelaxOptions,
) -> Result<OScaling> {
    let n = inst.n();
    if !(gamma0 > 0.0) || !gamma0.is_finite() {
        return Err(Error::NonPositiveScaling { index: 0, value: gamma0 });
    }
    if bound == BoundKind::Ddfact {
        // z(γe) does not depend on γ; answer at γ = 1 whatever the start
        let rr = solve_relaxation(inst, bound, &ScalingVector::ones(n), relax)?;
        return Ok(OScaling { gamma: 1.0, z: rr.valid_ub, derivative: 0.0, iterations: 0, scale_invariant: true, relax: rr });
    }
    let at = |psi: f64, warm: Option<&ActiveSet>| -> Result<(ZEval, f64, f64)> {
        let ev = eval_z(inst, bound, &vec![psi; n], relax, warm)?;
        let d: f64 = ev.grad.iter().sum();
        let ups = ScalingVector::uniform(n, libm::exp(psi))?;
        let h = linx::linx_hess_logups(inst, &ev.rr.x_star, &ups)?;
        let curv: f64 = h.as_slice().iter().sum();
        Ok((ev, d, curv))
    };
    let mut psi = libm::log(gamma0);
    let (mut ev, mut d, mut curv) = at(psi, None)?;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut prev: Option<(f64, f64)> = None;
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITER {
        let gamma = libm::exp(psi);
        if (d / gamma).abs() < deriv_tol {
            break;
        }
        if d > 0.0 {
            hi = psi;
        } else {
            lo = psi;
        }
        let bracketed = lo.is_finite() && hi.is_finite();
        if bracketed && hi - lo <= BRACKET_TOL * (1.0 + psi.abs()) {
            break;
        }
        iterations += 1;
        // the fixed-x Hessian ignores how the maximizer moves with ψ, so prefer
        // the secant slope of the derivative once two points are known
        let slope = match prev {
            Some((pp, pd)) if pp != psi && (d - pd) / (psi - pp) > 0.0 => (d - pd) / (psi - pp),
            _ => curv,
        };
        let slow = prev.is_some_and(|(_, pd)| d.abs() > 0.5 * pd.abs());
        let newton = if slope > 0.0 { Some(psi - d / slope) } else { None };
        let next = match newton {
            Some(t) if t > lo && t < hi && (t - psi).abs() <= 2.0 && !(slow && bracketed) => t,
            _ if bracketed => 0.5 * (lo + hi),
            _ => psi - d.signum(),
        };
        prev = Some((psi, d));
        psi = next;
        let warm = ev.rr.active_set.clone();
        (ev, d, curv) = at(psi, Some(&warm))?;
    }
    let gamma = libm::exp(psi);
    let converged = (d / gamma).abs() < deriv_tol || (lo.is_finite() && hi.is_finite() && hi - lo <= BRACKET_TOL * (1.0 + psi.abs()));
    if !converged {
        return Err(Error::IterationLimit { iterations, residual: d / gamma });
    }
    Ok(OScaling { gamma, z: ev.z, derivative: d / gamma, iterations, scale_invariant: false, relax: ev.rr })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalingMode {
    /// `Υ = e`
    None,
    /// `Υ = γ*e` with γ* from [`newton_oscaling`]
    O,
    /// BFGS on `ψ` started from the o-scaling point
    G,
}

impl ScalingMode {
    pub fn name(self) -> &'static str {
        match self {
            ScalingMode::None => "none",
            ScalingMode::O => "o",
            ScalingMode::G => "g",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScalingOptions {
    pub gamma0: f64,
    pub deriv_tol: f64,
    /// Gap tolerance for the relaxations solved inside the Newton iteration.
    pub newton_relax_tol: f64,
    pub bfgs: BfgsOptions,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions { gamma0: 1.0, deriv_tol: DEFAULT_DERIV_TOL, newton_relax_tol: 1e-12, bfgs: BfgsOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct ScaledBound {
    pub ups: ScalingVector,
    /// Certified upper bound `value + gap` at `ups`.
    pub z: f64,
    pub relax: RelaxationResult,
    pub gamma: Option<f64>,
    pub bfgs_steps: usize,
}

/// The bound under one scaling mode.
pub fn scaled_bound(inst: &Instance, bound: BoundKind, mode: ScalingMode, opts: &ScalingOptions) -> Result<ScaledBound> {
    let n = inst.n();
    let relax = &opts.bfgs.relax;
    if mode == ScalingMode::None {
        let ups = ScalingVector::ones(n);
        let rr = solve_relaxation(inst, bound, &ups, relax)?;
        return Ok(ScaledBound { ups, z: rr.valid_ub, relax: rr, gamma: None, bfgs_steps: 0 });
    }
    let newton_relax = RelaxOptions { tol: opts.newton_relax_tol.min(relax.tol), ..relax.clone() };
    let os = newton_oscaling(inst, bound, opts.gamma0, opts.deriv_tol, &newton_relax)?;
    let ups = ScalingVector::uniform(n, os.gamma)?;
    if mode == ScalingMode::O {
        return Ok(ScaledBound { ups, z: os.z, relax: os.relax, gamma: Some(os.gamma), bfgs_steps: 0 });
    }
    let mut bo = opts.bfgs.clone();
    bo.relax.warm_start = Some(os.relax.active_set.clone());
    let br = bfgs_optimize_scaling(inst, bound, &ups, &bo)?;
    let steps = br.trace.len() - 1;
    if os.z <= br.z {
        // the tighter Newton solve already certifies a smaller bound at γ*e
        return Ok(ScaledBound { ups, z: os.z, relax: os.relax, gamma: Some(os.gamma), bfgs_steps: steps });
    }
    Ok(ScaledBound { ups: br.ups, z: br.z, relax: br.relax, gamma: Some(os.gamma), bfgs_steps: steps })
}
