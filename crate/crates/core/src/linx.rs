//! The g-scaled linx objective
//!
//! ```text
//! f(x; Υ) = ½ ldet( Diag(Υ) C Diag(x) C Diag(Υ) + Diag(e − x) ) − Σ x_i log γ_i
//! ```
//!
//! with its gradient in `x`, its Hessian in `x`, and its gradient and Hessian
//! in `ψ = log Υ`. Points where the matrix argument is not positive definite
//! are reported through `in_domain`, never as an error from [`linx_value`].

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::matrix::Mat;
use crate::scaling::ScalingVector;
use crate::spectral::{cholesky, inverse_from_cholesky, ldet_from_cholesky};

#[derive(Clone, Debug)]
pub struct LinxEval {
    /// Objective value; `-∞` outside the domain.
    pub value: f64,
    pub f_mat: Mat,
    pub finv: Option<Mat>,
    pub in_domain: bool,
}

fn check_dims(inst: &Instance, x: &[f64], ups: &ScalingVector) -> Result<()> {
    if x.len() != inst.n() || ups.len() != inst.n() {
        return Err(Error::DimensionMismatch("x and Υ must have length n".into()));
    }
    Ok(())
}

/// `M = Diag(Υ)·C`; column `i` is `Υ ∘ C[:, i]`.
fn scaled_c(inst: &Instance, ups: &ScalingVector) -> Mat {
    let ones = alloc::vec![1.0; inst.n()];
    inst.c().scale_rows_cols(ups.ups(), &ones)
}

fn build_f(m: &Mat, x: &[f64]) -> Mat {
    let n = x.len();
    let mut f = m.scale_rows_cols(&alloc::vec![1.0; n], x).matmul(&m.transpose());
    for i in 0..n {
        f[(i, i)] += 1.0 - x[i];
    }
    f.symmetrize();
    f
}

pub fn linx_value(inst: &Instance, x: &[f64], ups: &ScalingVector) -> Result<LinxEval> {
    check_dims(inst, x, ups)?;
    let m = scaled_c(inst, ups);
    let f_mat = build_f(&m, x);
    let correction: f64 = x.iter().zip(ups.psi()).map(|(xi, p)| xi * p).sum();
    Ok(match cholesky(&f_mat) {
        Ok(l) => LinxEval {
            value: 0.5 * ldet_from_cholesky(&l) - correction,
            finv: Some(inverse_from_cholesky(&l)),
            f_mat,
            in_domain: true,
        },
        Err(_) => LinxEval { value: f64::NEG_INFINITY, f_mat, finv: None, in_domain: false },
    })
}

/// Value and gradient in `x` from one factorization; `None` outside the domain.
pub(crate) fn value_and_grad_x(inst: &Instance, x: &[f64], ups: &ScalingVector) -> Option<(f64, Vec<f64>)> {
    let m = scaled_c(inst, ups);
    let f_mat = build_f(&m, x);
    let l = cholesky(&f_mat).ok()?;
    let p = inverse_from_cholesky(&l);
    let psi = ups.psi();
    let value = 0.5 * ldet_from_cholesky(&l) - x.iter().zip(psi).map(|(a, b)| a * b).sum::<f64>();
    let k = m.transpose().matmul(&p).matmul(&m);
    let grad = (0..x.len()).map(|i| 0.5 * (k[(i, i)] - p[(i, i)]) - psi[i]).collect();
    Some((value, grad))
}

/// `∂f/∂x_i = ½[(Mᵀ F⁻¹ M)_ii − (F⁻¹)_ii] − log γ_i` with `M = Diag(Υ)C`.
pub fn linx_grad_x(inst: &Instance, x: &[f64], ups: &ScalingVector) -> Result<Vec<f64>> {
    check_dims(inst, x, ups)?;
    value_and_grad_x(inst, x, ups).map(|(_, g)| g).ok_or(Error::OutsideDomain)
}

/// Hessian in `x`: `H_ij = −½ tr(F⁻¹ B_i F⁻¹ B_j)` with `B_i = m_i m_iᵀ − e_i e_iᵀ`.
pub fn linx_hess_x(inst: &Instance, x: &[f64], ups: &ScalingVector) -> Result<Mat> {
    check_dims(inst, x, ups)?;
    let m = scaled_c(inst, ups);
    let l = cholesky(&build_f(&m, x)).map_err(|_| Error::OutsideDomain)?;
    let p = inverse_from_cholesky(&l);
    let r = m.transpose().matmul(&p);
    let k = r.matmul(&m);
    let n = x.len();
    let mut h = Mat::from_fn(n, n, |i, j| {
        -0.5 * (k[(i, j)] * k[(i, j)] - r[(i, j)] * r[(i, j)] - r[(j, i)] * r[(j, i)] + p[(i, j)] * p[(i, j)])
    });
    h.symmetrize();
    Ok(h)
}

/// Gradient in `ψ = log Υ`: `diag(F⁻¹ Diag(x̌)) − x̌` with `x̌ = x − e`.
pub fn linx_grad_logups(inst: &Instance, x: &[f64], ups: &ScalingVector) -> Result<Vec<f64>> {
    let ev = linx_value(inst, x, ups)?;
    let p = ev.finv.ok_or(Error::OutsideDomain)?;
    Ok((0..x.len()).map(|i| (x[i] - 1.0) * (p[(i, i)] - 1.0)).collect())
}

/// Hessian in `ψ = log Υ`:
/// `2·Diag(e−x)·Diag(diag(F⁻¹)) − 2·Diag(e−x)·(F⁻¹∘F⁻¹)·Diag(e−x)`.
pub fn linx_hess_logups(inst: &Instance, x: &[f64], ups: &ScalingVector) -> Result<Mat> {
    let ev = linx_value(inst, x, ups)?;
    let p = ev.finv.ok_or(Error::OutsideDomain)?;
    Ok(logups_hessian(&p, x, 2.0))
}

pub(crate) fn logups_hessian(p: &Mat, x: &[f64], factor: f64) -> Mat {
    let n = x.len();
    let mut h = Mat::from_fn(n, n, |i, j| {
        let wi = 1.0 - x[i];
        let wj = 1.0 - x[j];
        let diag = if i == j { wi * p[(i, i)] } else { 0.0 };
        factor * (diag - wi * p[(i, j)] * p[(i, j)] * wj)
    });
    h.symmetrize();
    h
}
