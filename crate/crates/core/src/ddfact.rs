//! The g-scaled factorization objective
//!
//! ```text
//! f(x; Υ) = Γ_s( Fᵀ Diag(Υ∘x) F ) − Σ x_i log γ_i,      C = F Fᵀ, F ∈ R^{n×k}
//! ```
//!
//! with `k = rank C`. The domain is `x ≥ 0` with `rank(Fᵀ Diag(Υ∘x) F) ≥ s`.
//! Derivatives use the β weights of the Γ_s kernel: with `G = F Q`,
//! `d_i = Σ_l G_il² β_l` gives `∂f/∂x_i = γ_i d_i − log γ_i` and
//! `∂f/∂γ_i = x_i d_i − x_i/γ_i`. At boundary points (some `x_i = 0`) the
//! tail weight on the zero eigenvalues makes the first of these a
//! generalized gradient in the directional sense, not just a supergradient.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gamma::{eval_spectrum, threshold_spectrum, GammaEval};
use crate::instance::{Factorization, Instance};
use crate::matrix::Mat;
use crate::scaling::ScalingVector;
use crate::spectral::{sym_eig, SpectralData};

#[derive(Clone, Debug)]
pub struct DdfactEval {
    /// Objective value; `-∞` outside the domain.
    pub value: f64,
    /// `Fᵀ Diag(Υ∘x) F`
    pub fx: Mat,
    pub gamma_eval: Option<GammaEval>,
    pub spectral: Option<SpectralData>,
    pub in_domain: bool,
}

fn check_dims(inst: &Instance, fac: &Factorization, x: &[f64], ups: &ScalingVector) -> Result<()> {
    if x.len() != inst.n() || ups.len() != inst.n() || fac.f.rows() != inst.n() {
        return Err(Error::DimensionMismatch("x, Υ and F must all have n rows".into()));
    }
    Ok(())
}

fn build_fx(fac: &Factorization, x: &[f64], ups: &ScalingVector) -> Mat {
    let w: Vec<f64> = x.iter().zip(ups.ups()).map(|(a, g)| a * g).collect();
    let k = fac.f.cols();
    let mut fx = Mat::zeros(k, k);
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let row = fac.f.row(i);
        for a in 0..k {
            let ra = wi * row[a];
            for b in a..k {
                fx[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            fx[(a, b)] = fx[(b, a)];
        }
    }
    fx
}

pub fn ddfact_value(inst: &Instance, fac: &Factorization, x: &[f64], ups: &ScalingVector) -> Result<DdfactEval> {
    check_dims(inst, fac, x, ups)?;
    let fx = build_fx(fac, x, ups);
    let out = |fx| DdfactEval { value: f64::NEG_INFINITY, fx, gamma_eval: None, spectral: None, in_domain: false };
    if x.iter().any(|&v| !(v >= 0.0)) {
        return Ok(out(fx));
    }
    let sd = sym_eig(&fx)?;
    let lambdas = threshold_spectrum(&sd.lambdas, fx.rows());
    let ge = match eval_spectrum(lambdas, inst.s()) {
        Ok(ge) => ge,
        Err(Error::RankDeficient { .. }) => return Ok(out(fx)),
        Err(e) => return Err(e),
    };
    let correction: f64 = x.iter().zip(ups.psi()).map(|(a, p)| a * p).sum();
    Ok(DdfactEval { value: ge.phi - correction, fx, gamma_eval: Some(ge), spectral: Some(sd), in_domain: true })
}

/// `diag(F Q Diag(β) Qᵀ Fᵀ)`
fn weighted_diag(fac: &Factorization, ge: &GammaEval, sd: &SpectralData) -> Vec<f64> {
    let g = fac.f.matmul(&sd.q);
    (0..g.rows()).map(|i| g.row(i).iter().zip(&ge.beta).map(|(v, b)| v * v * b).sum()).collect()
}

/// Value and generalized gradient in `x`; `None` outside the domain.
pub(crate) fn value_and_grad_x(
    inst: &Instance,
    fac: &Factorization,
    x: &[f64],
    ups: &ScalingVector,
) -> Option<(f64, Vec<f64>)> {
    let ev = ddfact_value(inst, fac, x, ups).ok()?;
    let (ge, sd) = (ev.gamma_eval.as_ref()?, ev.spectral.as_ref()?);
    let d = weighted_diag(fac, ge, sd);
    let grad = (0..x.len()).map(|i| ups.ups()[i] * d[i] - ups.psi()[i]).collect();
    Some((ev.value, grad))
}

/// `g_x = Υ∘diag(F Q Diag(β) Qᵀ Fᵀ) − log Υ`
pub fn ddfact_gen_grad_x(inst: &Instance, fac: &Factorization, x: &[f64], ups: &ScalingVector) -> Result<Vec<f64>> {
    check_dims(inst, fac, x, ups)?;
    value_and_grad_x(inst, fac, x, ups).map(|(_, g)| g).ok_or(Error::OutsideDomain)
}

/// `g_Υ = x∘diag(F Q Diag(β) Qᵀ Fᵀ) − Diag(Υ)⁻¹ x`
pub fn ddfact_grad_ups(inst: &Instance, fac: &Factorization, x: &[f64], ups: &ScalingVector) -> Result<Vec<f64>> {
    let ev = ddfact_value(inst, fac, x, ups)?;
    let (Some(ge), Some(sd)) = (ev.gamma_eval.as_ref(), ev.spectral.as_ref()) else {
        return Err(Error::OutsideDomain);
    };
    let d = weighted_diag(fac, ge, sd);
    Ok((0..x.len()).map(|i| x[i] * d[i] - x[i] / ups.ups()[i]).collect())
}
