//! Dense symmetric linear algebra: Jacobi eigendecomposition, Cholesky
//! log-determinants and solves, numeric rank.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Relative off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 80;
/// Relative asymmetry accepted by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues sorted non-increasing with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub lambdas: Vec<f64>,
    pub q: Mat,
}

impl SpectralData {
    /// `Q · Diag(λ) · Qᵀ`
    pub fn reconstruct(&self) -> Mat {
        let n = self.q.rows();
        let k = self.lambdas.len();
        Mat::from_fn(n, n, |i, j| (0..k).map(|l| self.q[(i, l)] * self.lambdas[l] * self.q[(j, l)]).sum())
    }

    /// `Q · Diag(w) · Qᵀ` for arbitrary weights on the eigenvectors.
    pub fn weighted(&self, w: &[f64]) -> Mat {
        let n = self.q.rows();
        Mat::from_fn(n, n, |i, j| (0..w.len()).map(|l| self.q[(i, l)] * w[l] * self.q[(j, l)]).sum())
    }
}

/// Threshold under which an eigenvalue counts as zero: `dim · ε · λ_max`.
pub fn rank_threshold(dim: usize, lambda_max: f64) -> f64 {
    dim as f64 * f64::EPSILON * lambda_max.max(0.0)
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(x: &Mat) -> Result<SpectralData> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "expected square matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let scale = x.max_abs();
    let asym = x.asymmetry();
    if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Asymmetric { deviation: asym });
    }
    let n = x.rows();
    let mut a = x.clone();
    a.symmetrize();
    let mut v = Mat::identity(n);
    let total = a.frobenius();

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        let off = libm::sqrt(2.0 * off);
        if off <= JACOBI_TOL * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // skip rotations that cannot change the diagonal in floating point
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = a.diag();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(core::cmp::Ordering::Equal));
    let lambdas = order.iter().map(|&i| diag[i]).collect();
    let q = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SpectralData { lambdas, q })
}

fn rotate(a: &mut Mat, v: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Lower-triangular Cholesky factor. Fails with [`Error::NotPositiveDefinite`]
/// on the first nonpositive pivot.
pub fn cholesky(x: &Mat) -> Result<Mat> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch("cholesky needs a square matrix".into()));
    }
    let n = x.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = x[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = libm::sqrt(d);
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = x[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

pub fn ldet_from_cholesky(l: &Mat) -> f64 {
    (0..l.rows()).map(|i| 2.0 * libm::log(l[(i, i)])).sum()
}

/// Natural log-determinant of a positive definite matrix.
pub fn ldet_pd(x: &Mat) -> Result<f64> {
    Ok(ldet_from_cholesky(&cholesky(x)?))
}

/// Solves `L Lᵀ y = b` in place.
pub fn cholesky_solve_vec(l: &Mat, b: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[(i, k)] * b[k];
        }
        b[i] = v / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in (i + 1)..n {
            v -= l[(k, i)] * b[k];
        }
        b[i] = v / l[(i, i)];
    }
}

/// `X⁻¹ B` for positive definite `X`.
pub fn solve_pd(x: &Mat, b: &Mat) -> Result<Mat> {
    if b.rows() != x.rows() {
        return Err(Error::DimensionMismatch("right-hand side rows differ from matrix order".into()));
    }
    let l = cholesky(x)?;
    let mut out = Mat::zeros(b.rows(), b.cols());
    let mut col = alloc::vec![0.0; b.rows()];
    for j in 0..b.cols() {
        for i in 0..b.rows() {
            col[i] = b[(i, j)];
        }
        cholesky_solve_vec(&l, &mut col);
        for i in 0..b.rows() {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

/// Inverse from a Cholesky factor, symmetrized.
pub fn inverse_from_cholesky(l: &Mat) -> Mat {
    let n = l.rows();
    let mut inv = Mat::zeros(n, n);
    let mut col = alloc::vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        cholesky_solve_vec(l, &mut col);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv.symmetrize();
    inv
}

pub fn inverse_pd(x: &Mat) -> Result<Mat> {
    Ok(inverse_from_cholesky(&cholesky(x)?))
}

/// Number of eigenvalues above [`rank_threshold`].
pub fn numeric_rank(x: &Mat) -> Result<usize> {
    let sd = sym_eig(x)?;
    Ok(rank_of_spectrum(&sd.lambdas, x.rows()))
}

pub fn rank_of_spectrum(lambdas: &[f64], dim: usize) -> usize {
    let lmax = lambdas.first().copied().unwrap_or(0.0);
    let thr = rank_threshold(dim, lmax);
    lambdas.iter().filter(|&&l| l > thr).count()
}
