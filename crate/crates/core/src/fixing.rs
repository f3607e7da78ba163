//! Variable fixing from dual certificates of the relaxations.
//!
//! If a bound `UB` comes with multipliers `υ ≥ 0` for `x ≥ 0` and `ν ≥ 0` for
//! `x ≤ e`, every integer solution with `x_j = 1` has value at most
//! `UB − υ_j`, and every one with `x_j = 0` at most `UB − ν_j`. When that is
//! below the incumbent value `LB`, `x_j` can be fixed the other way without
//! losing any solution that beats the incumbent.
//!
//! Fixing `x_J = 1` replaces `C` by the Schur complement of `C[J,J]` and adds
//! `ldet C[J,J]` to a running shift; fixing to zero drops the row and column.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::heuristic::{incumbent, IncumbentSolution};
use crate::instance::{complement_instance, Instance};
use crate::matrix::Mat;
use crate::relax::{BoundKind, DualCertificate};
use crate::scaling::{scaled_bound, ScalingMode, ScalingOptions};
use crate::spectral::{cholesky, ldet_from_cholesky, solve_pd};

pub const DEFAULT_FIX_TOL: f64 = 1e-8;

/// Indices (in the certificate's own coordinates) that may be fixed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FixDecision {
    pub zeros: Vec<usize>,
    pub ones: Vec<usize>,
}

/// Applies the fixing rule. A variable is fixed only when its bound falls
/// below `lb − tol`, so any solution strictly better than `lb` is kept.
pub fn fix_from_duals(ub: f64, lb: f64, duals: &DualCertificate, tol: f64) -> Result<FixDecision> {
    if ub < lb - tol {
        return Err(Error::InconsistentBounds { ub, lb });
    }
    let mut out = FixDecision::default();
    for (j, (&u, &v)) in duals.upsilon.iter().zip(&duals.nu).enumerate() {
        if ub - u < lb - tol {
            out.zeros.push(j);
        } else if ub - v < lb - tol {
            out.ones.push(j);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixSource {
    Linx,
    Ddfact,
    /// Factorization bound of the complementary problem.
    DdfactComp,
    /// Remaining gap below tolerance; the rest follows the incumbent.
    GapClosed,
    /// Cardinality leaves no choice.
    Forced,
    /// The reduced problem has no solution beating the incumbent.
    Vacuous,
}

impl FixSource {
    pub fn name(self) -> &'static str {
        match self {
            FixSource::Linx => "linx",
            FixSource::Ddfact => "ddfact",
            FixSource::DdfactComp => "ddfact-comp",
            FixSource::GapClosed => "gap-closed",
            FixSource::Forced => "forced",
            FixSource::Vacuous => "vacuous",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixCertificate {
    /// Original index.
    pub index: usize,
    pub value: bool,
    pub source: FixSource,
    /// Bound in original objective units; NaN for non-dual fixes.
    pub ub: f64,
    pub multiplier: f64,
    pub lb: f64,
    pub round: usize,
}

#[derive(Clone, Debug)]
pub struct BoundSummary {
    pub source: FixSource,
    /// Upper bound in original objective units.
    pub ub: f64,
    pub fixed: usize,
}

#[derive(Clone, Debug)]
pub struct RoundSummary {
    pub round: usize,
    pub remaining: usize,
    pub bounds: Vec<BoundSummary>,
    pub newly_fixed: usize,
}

#[derive(Clone, Debug)]
pub struct FixingOptions {
    pub mode: ScalingMode,
    pub scaling: ScalingOptions,
    /// Defaults to `n` when `None`.
    pub rounds_cap: Option<usize>,
    pub tol: f64,
    /// Starting incumbent; the greedy heuristic is used otherwise.
    pub incumbent: Option<IncumbentSolution>,
    pub use_complement: bool,
}

impl Default for FixingOptions {
    fn default() -> Self {
        FixingOptions {
            mode: ScalingMode::G,
            scaling: ScalingOptions::default(),
            rounds_cap: None,
            tol: DEFAULT_FIX_TOL,
            incumbent: None,
            use_complement: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixingReport {
    /// Per original index: `Some(value)` once fixed.
    pub fixed: Vec<Option<bool>>,
    pub certificates: Vec<FixCertificate>,
    pub rounds: Vec<RoundSummary>,
    /// Final incumbent value and set.
    pub lb: f64,
    pub incumbent: Vec<usize>,
    /// Smallest bound seen in the last round, original units.
    pub final_ub: f64,
    pub notes: Vec<String>,
}

impl FixingReport {
    pub fn fixed_count(&self) -> usize {
        self.fixed.iter().filter(|f| f.is_some()).count()
    }
    pub fn fixed_to_zero(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&i| self.fixed[i] == Some(false)).collect()
    }
    pub fn fixed_to_one(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&i| self.fixed[i] == Some(true)).collect()
    }
}

/// The free part of the problem after some fixes.
#[derive(Clone, Debug)]
struct Reduced {
    idx: Vec<usize>,
    c: Mat,
    a: Mat,
    b: Vec<f64>,
    s: usize,
    shift: f64,
}

enum Shrunk {
    Ok(Reduced),
    /// No completion beats the incumbent.
    Vacuous,
}

impl Reduced {
    fn from_instance(inst: &Instance) -> Self {
        Reduced {
            idx: (0..inst.n()).collect(),
            c: inst.c().clone(),
            a: inst.a().clone(),
            b: inst.b().to_vec(),
            s: inst.s(),
            shift: 0.0,
        }
    }

    fn n(&self) -> usize {
        self.idx.len()
    }

    fn shrink(&self, zeros: &[usize], ones: &[usize]) -> Result<Shrunk> {
        let keep: Vec<usize> = (0..self.n()).filter(|i| !zeros.contains(i) && !ones.contains(i)).collect();
        let m = self.a.rows();
        let rows: Vec<usize> = (0..m).collect();
        let mut c = self.c.select(&keep, &keep);
        let mut shift = self.shift;
        if !ones.is_empty() {
            let coo = self.c.select(ones, ones);
            let Ok(l) = cholesky(&coo) else { return Ok(Shrunk::Vacuous) };
            shift += ldet_from_cholesky(&l);
            if !keep.is_empty() {
                let cok = self.c.select(ones, &keep);
                let w = solve_pd(&coo, &cok)?;
                c = c.sub(&cok.transpose().matmul(&w));
                c.symmetrize();
            }
        }
        let b = (0..m).map(|r| self.b[r] - ones.iter().map(|&j| self.a[(r, j)]).sum::<f64>()).collect();
        let a = if m == 0 { Mat::zeros(0, keep.len()) } else { self.a.select(&rows, &keep) };
        if ones.len() > self.s {
            return Ok(Shrunk::Vacuous);
        }
        Ok(Shrunk::Ok(Reduced {
            idx: keep.iter().map(|&i| self.idx[i]).collect(),
            c,
            a,
            b,
            s: self.s - ones.len(),
            shift,
        }))
    }

    fn instance(&self) -> Result<Option<Instance>> {
        match Instance::new(self.c.clone(), self.s, self.a.clone(), self.b.clone()) {
            Ok(i) => Ok(Some(i)),
            Err(Error::RankDeficient { .. }) | Err(Error::NotPsd { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

struct State {
    fixed: Vec<Option<bool>>,
    certs: Vec<FixCertificate>,
    inc_set: Vec<usize>,
    lb: f64,
    notes: Vec<String>,
}

impl State {
    fn fix(&mut self, index: usize, value: bool, source: FixSource, ub: f64, multiplier: f64, round: usize) {
        if self.fixed[index].is_none() {
            self.fixed[index] = Some(value);
            self.certs.push(FixCertificate { index, value, source, ub, multiplier, lb: self.lb, round });
        }
    }

    fn fix_rest_to_incumbent(&mut self, red: &Reduced, source: FixSource, round: usize) {
        for &i in &red.idx {
            let v = self.inc_set.contains(&i);
            self.fix(i, v, source, f64::NAN, f64::NAN, round);
        }
    }
}

/// Repeated rounds of bound evaluation, fixing and shrinking.
///
/// Each round evaluates the linx and factorization bounds and, when the
/// reduced `C` is invertible, the factorization bound of the complementary
/// problem, all under `opts.mode`. Stops when a round fixes nothing, every
/// variable is fixed, or the round cap is hit.
pub fn iterate_fixing(inst: &Instance, opts: &FixingOptions) -> Result<FixingReport> {
    let n = inst.n();
    let tol = opts.tol;
    let start = match &opts.incumbent {
        Some(inc) => Some(inc.clone()),
        None => match incumbent(inst) {
            Ok(inc) => Some(inc),
            Err(Error::NoFeasibleSolution) => None,
            Err(e) => return Err(e),
        },
    };
    let mut st = State {
        fixed: vec![None; n],
        certs: Vec::new(),
        inc_set: start.as_ref().map(|s| s.set.clone()).unwrap_or_default(),
        lb: start.as_ref().map_or(f64::NEG_INFINITY, |s| s.value),
        notes: Vec::new(),
    };
    let cap = opts.rounds_cap.unwrap_or(n);
    let mut red = Reduced::from_instance(inst);
    let mut rounds = Vec::new();
    let mut final_ub = f64::INFINITY;
    for round in 1..=cap {
        if red.n() == 0 {
            break;
        }
        if red.s == 0 || red.s == red.n() {
            let all = red.s == red.n();
            for &i in &red.idx {
                st.fix(i, all, FixSource::Forced, f64::NAN, f64::NAN, round);
            }
            break;
        }
        let Some(rinst) = red.instance()? else {
            st.notes.push(format!("round {round}: reduced matrix has rank below s"));
            st.fix_rest_to_incumbent(&red, FixSource::Vacuous, round);
            break;
        };
        if let Err(Error::Infeasible) = rinst.relaxation_point() {
            st.notes.push(format!("round {round}: reduced polytope is empty"));
            st.fix_rest_to_incumbent(&red, FixSource::Vacuous, round);
            break;
        }
        if let Ok(h) = incumbent(&rinst) {
            if h.value + red.shift > st.lb + 1e-12 {
                st.lb = h.value + red.shift;
                let mut set: Vec<usize> = st.fixed_ones();
                set.extend(h.set.iter().map(|&i| red.idx[i]));
                set.sort_unstable();
                st.inc_set = set;
            }
        }
        let lb_red = st.lb - red.shift;

        let mut zeros: Vec<(usize, FixSource, f64, f64)> = Vec::new();
        let mut ones: Vec<(usize, FixSource, f64, f64)> = Vec::new();
        let mut bounds = Vec::new();
        let mut round_ub = f64::INFINITY;

        let mut evaluate = |target: &Instance, kind: BoundKind, source: FixSource, offset: f64, flip: bool, st: &mut State| {
            let sb = match scaled_bound(target, kind, opts.mode, &opts.scaling) {
                Ok(sb) => sb,
                Err(e) => {
                    st.notes.push(format!("round {round}: {} under {} scaling failed ({e}); using Υ = e", source.name(), opts.mode.name()));
                    match scaled_bound(target, kind, ScalingMode::None, &opts.scaling) {
                        Ok(sb) => sb,
                        Err(e) => {
                            st.notes.push(format!("round {round}: {} failed ({e})", source.name()));
                            return;
                        }
                    }
                }
            };
            let cert = &sb.relax.duals;
            let ub = cert.dual_ub;
            round_ub = round_ub.min(ub + offset + red.shift);
            let dec = match fix_from_duals(ub, lb_red - offset, cert, tol) {
                Ok(d) => d,
                Err(e) => {
                    st.notes.push(format!("round {round}: {} skipped ({e})", source.name()));
                    bounds.push(BoundSummary { source, ub: ub + offset + red.shift, fixed: 0 });
                    return;
                }
            };
            let ub_orig = ub + offset + red.shift;
            let count = dec.zeros.len() + dec.ones.len();
            for &j in &dec.zeros {
                let entry = (j, source, ub_orig, cert.upsilon[j]);
                if flip { ones.push(entry) } else { zeros.push(entry) }
            }
            for &j in &dec.ones {
                let entry = (j, source, ub_orig, cert.nu[j]);
                if flip { zeros.push(entry) } else { ones.push(entry) }
            }
            bounds.push(BoundSummary { source, ub: ub_orig, fixed: count });
        };

        evaluate(&rinst, BoundKind::Linx, FixSource::Linx, 0.0, false, &mut st);
        evaluate(&rinst, BoundKind::Ddfact, FixSource::Ddfact, 0.0, false, &mut st);
        if opts.use_complement {
            match complement_instance(&rinst) {
                Ok((comp, ldet_c)) => evaluate(&comp, BoundKind::Ddfact, FixSource::DdfactComp, ldet_c, true, &mut st),
                Err(Error::Singular) => {}
                Err(e) => st.notes.push(format!("round {round}: complement unavailable ({e})")),
            }
        }
        final_ub = round_ub;

        if round_ub - st.lb <= tol {
            let remaining = red.n();
            rounds.push(RoundSummary { round, remaining, bounds, newly_fixed: remaining });
            st.fix_rest_to_incumbent(&red, FixSource::GapClosed, round);
            break;
        }

        let mut z_idx: Vec<usize> = zeros.iter().map(|e| e.0).collect();
        let mut o_idx: Vec<usize> = ones.iter().map(|e| e.0).collect();
        z_idx.sort_unstable();
        z_idx.dedup();
        o_idx.sort_unstable();
        o_idx.dedup();
        if z_idx.iter().any(|j| o_idx.contains(j)) {
            st.notes.push(format!("round {round}: a variable was fixed both ways"));
            let remaining = red.n();
            rounds.push(RoundSummary { round, remaining, bounds, newly_fixed: remaining });
            st.fix_rest_to_incumbent(&red, FixSource::Vacuous, round);
            break;
        }
        let newly = z_idx.len() + o_idx.len();
        rounds.push(RoundSummary { round, remaining: red.n(), bounds, newly_fixed: newly });
        if newly == 0 {
            break;
        }
        for (j, src, ub, mult) in zeros.iter().chain(&ones).copied() {
            let value = o_idx.contains(&j);
            st.fix(red.idx[j], value, src, ub, mult, round);
        }
        match red.shrink(&z_idx, &o_idx)? {
            Shrunk::Ok(r) => red = r,
            Shrunk::Vacuous => {
                let rest = Reduced { idx: red.idx.iter().copied().filter(|&i| st.fixed[i].is_none()).collect(), ..red.clone() };
                st.notes.push(format!("round {round}: variables fixed to one are singular together"));
                st.fix_rest_to_incumbent(&rest, FixSource::Vacuous, round);
                break;
            }
        }
    }
    Ok(FixingReport {
        fixed: st.fixed,
        certificates: st.certs,
        rounds,
        lb: st.lb,
        incumbent: st.inc_set,
        final_ub,
        notes: st.notes,
    })
}

impl State {
    fn fixed_ones(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&i| self.fixed[i] == Some(true)).collect()
    }
}
