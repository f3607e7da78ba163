//! The g-scaled BQP objective at fixed lifted points `(x, X)`
//!
//! ```text
//! f(x, X; Υ) = ldet( (Diag(Υ) C Diag(Υ)) ∘ X + Diag(e − x) ) − 2 Σ x_i log γ_i
//! ```
//!
//! Only evaluation and derivatives in `log Υ` live here; maximizing over the
//! lifted set would need a semidefinite solver.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::instance::{scale_matrix, Instance};
use crate::linx::logups_hessian;
use crate::matrix::Mat;
use crate::scaling::ScalingVector;
use crate::spectral::{cholesky, inverse_from_cholesky, ldet_from_cholesky, sym_eig};

/// Slack used by the membership test for the lifted set.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct BqpPoint {
    pub x: Vec<f64>,
    pub big_x: Mat,
    pub s: usize,
    /// `X − xxᵀ ⪰ 0`, `diag X = x`, `eᵀx = s`, `Xe = s·x`, each within [`MEMBERSHIP_TOL`].
    pub in_p: bool,
}

impl BqpPoint {
    pub fn new(x: Vec<f64>, big_x: Mat, s: usize) -> Result<Self> {
        let n = x.len();
        if big_x.rows() != n || big_x.cols() != n {
            return Err(Error::DimensionMismatch("X must be n×n".into()));
        }
        let in_p = membership(&x, &big_x, s)?;
        Ok(BqpPoint { x, big_x, s, in_p })
    }
}

fn membership(x: &[f64], big_x: &Mat, s: usize) -> Result<bool> {
    let n = x.len();
    let tol = MEMBERSHIP_TOL;
    if big_x.asymmetry() > tol {
        return Ok(false);
    }
    if (x.iter().sum::<f64>() - s as f64).abs() > tol {
        return Ok(false);
    }
    for i in 0..n {
        if (big_x[(i, i)] - x[i]).abs() > tol {
            return Ok(false);
        }
        let row_sum: f64 = big_x.row(i).iter().sum();
        if (row_sum - s as f64 * x[i]).abs() > tol {
            return Ok(false);
        }
    }
    let mut diff = Mat::from_fn(n, n, |i, j| big_x[(i, j)] - x[i] * x[j]);
    diff.symmetrize();
    let sd = sym_eig(&diff)?;
    Ok(sd.lambdas.last().map_or(true, |&l| l >= -tol))
}

/// `(x, xxᵀ)` for a 0/1 vector of cardinality `s`.
pub fn bqp_lift_integer(x01: &[f64], s: usize) -> Result<BqpPoint> {
    if x01.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidInput("lift needs a 0/1 vector".into()));
    }
    if x01.iter().filter(|&&v| v == 1.0).count() != s {
        return Err(Error::InvalidInput("lift vector cardinality differs from s".into()));
    }
    let n = x01.len();
    let big_x = Mat::from_fn(n, n, |i, j| x01[i] * x01[j]);
    BqpPoint::new(x01.to_vec(), big_x, s)
}

#[derive(Clone, Debug)]
pub struct BqpEval {
    /// Objective value; `-∞` outside the domain.
    pub value: f64,
    pub finv: Option<Mat>,
    pub in_domain: bool,
}

pub fn bqp_value(inst: &Instance, pt: &BqpPoint, ups: &ScalingVector) -> Result<BqpEval> {
    let n = inst.n();
    if pt.x.len() != n || ups.len() != n {
        return Err(Error::DimensionMismatch("point and Υ must have length n".into()));
    }
    let mut f = scale_matrix(inst, ups).hadamard(&pt.big_x);
    for i in 0..n {
        f[(i, i)] += 1.0 - pt.x[i];
    }
    f.symmetrize();
    let correction: f64 = 2.0 * pt.x.iter().zip(ups.psi()).map(|(a, p)| a * p).sum::<f64>();
    Ok(match cholesky(&f) {
        Ok(l) => BqpEval {
            value: ldet_from_cholesky(&l) - correction,
            finv: Some(inverse_from_cholesky(&l)),
            in_domain: true,
        },
        Err(_) => BqpEval { value: f64::NEG_INFINITY, finv: None, in_domain: false },
    })
}

/// `2·(diag(F⁻¹ Diag(x̌)) − x̌)` with `x̌ = x − e`.
pub fn bqp_grad_logups(inst: &Instance, pt: &BqpPoint, ups: &ScalingVector) -> Result<Vec<f64>> {
    let p = bqp_value(inst, pt, ups)?.finv.ok_or(Error::OutsideDomain)?;
    Ok((0..pt.x.len()).map(|i| 2.0 * (pt.x[i] - 1.0) * (p[(i, i)] - 1.0)).collect())
}

/// `4·Diag(e−x)·Diag(diag F⁻¹) − 4·Diag(e−x)·(F⁻¹∘F⁻¹)·Diag(e−x)`
pub fn bqp_hess_logups(inst: &Instance, pt: &BqpPoint, ups: &ScalingVector) -> Result<Mat> {
    let p = bqp_value(inst, pt, ups)?.finv.ok_or(Error::OutsideDomain)?;
    Ok(logups_hessian(&p, &pt.x, 4.0))
}
