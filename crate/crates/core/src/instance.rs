//! Problem data for constrained maximum-entropy sampling:
//! choose `S ⊂ N`, `|S| = s`, maximizing `ldet C[S,S]` subject to `A·1_S ≤ b`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::matrix::{dot, Mat};
use crate::scaling::ScalingVector;
use crate::spectral::{cholesky, ldet_from_cholesky, rank_of_spectrum, sym_eig};

/// Relative asymmetry tolerated in the covariance matrix.
pub const SYMMETRY_REL_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted, relative to `‖C‖₂`.
pub const PSD_REL_TOL: f64 = 1e-10;
/// Eigenvalue ratio `λ_min/λ_max` below which `C` is too close to singular to invert.
pub const INVERSION_COND_TOL: f64 = 1e-12;
const GEN_MAX_ATTEMPTS: usize = 100;

#[derive(Clone, Debug)]
pub struct Instance {
    n: usize,
    c: Mat,
    s: usize,
    a: Mat,
    b: Vec<f64>,
    rank: usize,
}

impl Instance {
    /// Validates and builds an instance. `a` is `m × n`; pass an empty `0 × n`
    /// matrix (or use [`Instance::mesp`]) for the unconstrained problem.
    pub fn new(c: Mat, s: usize, a: Mat, b: Vec<f64>) -> Result<Self> {
        let n = c.rows();
        if !c.is_square() {
            return Err(Error::DimensionMismatch(format!("C is {}x{}", c.rows(), c.cols())));
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!("need n > 1, got {n}")));
        }
        if s == 0 || s >= n {
            return Err(Error::InvalidInput(format!("need 0 < s < n, got s={s}, n={n}")));
        }
        if a.rows() > 0 && a.cols() != n {
            return Err(Error::DimensionMismatch(format!("A has {} columns, expected {n}", a.cols())));
        }
        if a.rows() != b.len() {
            return Err(Error::DimensionMismatch(format!("A has {} rows but b has {} entries", a.rows(), b.len())));
        }
        if c.as_slice().iter().chain(a.as_slice()).chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry".into()));
        }
        let asym = c.asymmetry();
        if asym > SYMMETRY_REL_TOL * c.max_abs() {
            return Err(Error::Asymmetric { deviation: asym });
        }
        let mut c = c;
        c.symmetrize();
        let sd = sym_eig(&c)?;
        let lmax = sd.lambdas[0];
        let lmin = *sd.lambdas.last().unwrap();
        if lmin < -PSD_REL_TOL * lmax.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotPsd { min_eigenvalue: lmin });
        }
        let rank = rank_of_spectrum(&sd.lambdas, n);
        if rank < s {
            return Err(Error::RankDeficient { rank, required: s });
        }
        let a = if a.rows() == 0 { Mat::zeros(0, n) } else { a };
        Ok(Instance { n, c, s, a, b, rank })
    }

    /// Unconstrained instance.
    pub fn mesp(c: Mat, s: usize) -> Result<Self> {
        let n = c.rows();
        Instance::new(c, s, Mat::zeros(0, n), Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn m(&self) -> usize {
        self.a.rows()
    }
    pub fn c(&self) -> &Mat {
        &self.c
    }
    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Same data with a different cardinality.
    pub fn with_s(&self, s: usize) -> Result<Self> {
        Instance::new(self.c.clone(), s, self.a.clone(), self.b.clone())
    }

    /// `ldet C[S,S]`, or `None` when the submatrix is not positive definite.
    pub fn ldet_subset(&self, set: &[usize]) -> Option<f64> {
        let sub = self.c.select(set, set);
        cholesky(&sub).ok().map(|l| ldet_from_cholesky(&l))
    }

    /// `A x − b`, one entry per side constraint.
    pub fn constraint_residuals(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m()).map(|i| dot(self.a.row(i), x) - self.b[i]).collect()
    }

    /// `Ax ≤ b + tol` for every row.
    pub fn satisfies_side_constraints(&self, x: &[f64], tol: f64) -> bool {
        self.constraint_residuals(x).iter().all(|&r| r <= tol)
    }

    /// Membership in `{eᵀx = s, 0 ≤ x ≤ e, Ax ≤ b}` up to `tol`.
    pub fn in_polytope(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n
            && x.iter().all(|&v| v >= -tol && v <= 1.0 + tol)
            && (x.iter().sum::<f64>() - self.s as f64).abs() <= tol * self.n as f64
            && self.satisfies_side_constraints(x, tol)
    }

    /// Some point of the continuous relaxation's feasible polytope.
    pub fn relaxation_point(&self) -> Result<Vec<f64>> {
        let n = self.n;
        let mut lp = LinearProgram::new(vec![0.0; n]);
        lp.add_row(vec![1.0; n], Relation::Eq, self.s as f64);
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            lp.add_row(r, Relation::Le, 1.0);
        }
        for i in 0..self.m() {
            lp.add_row(self.a.row(i).to_vec(), Relation::Le, self.b[i]);
        }
        Ok(lp.solve()?.x)
    }
}

/// `C = F Fᵀ` with `F` of full column rank `k = rank(C)`.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub f: Mat,
    pub k: usize,
}

/// `F := U Λ^{1/2}` from the spectral decomposition with zero eigenvalues
/// dropped; columns follow descending eigenvalues.
pub fn factorize(inst: &Instance) -> Factorization {
    let sd = sym_eig(inst.c()).expect("instance matrix is symmetric");
    let k = inst.rank();
    let n = inst.n();
    let f = Mat::from_fn(n, k, |i, j| sd.q[(i, j)] * libm::sqrt(sd.lambdas[j]));
    Factorization { f, k }
}

/// The complementary instance `(C⁻¹, n−s, −A, b−Ae)` and the shift `ldet C`.
pub fn complement_instance(inst: &Instance) -> Result<(Instance, f64)> {
    let sd = sym_eig(inst.c())?;
    let lmax = sd.lambdas[0];
    let lmin = *sd.lambdas.last().unwrap();
    if !(lmin > INVERSION_COND_TOL * lmax) {
        return Err(Error::Singular);
    }
    let inv_l: Vec<f64> = sd.lambdas.iter().map(|l| 1.0 / l).collect();
    let cinv = sd.weighted(&inv_l);
    let shift: f64 = sd.lambdas.iter().map(|&l| libm::log(l)).sum();
    let n = inst.n();
    let a = inst.a().scale(-1.0);
    let ae = inst.a().matvec(&vec![1.0; n]);
    let b = inst.b().iter().zip(&ae).map(|(bi, ai)| bi - ai).collect();
    let comp = Instance::new(cinv, n - inst.s(), a, b)?;
    Ok((comp, shift))
}

/// `Diag(Υ) · C · Diag(Υ)`.
pub fn scale_matrix(inst: &Instance, ups: &ScalingVector) -> Mat {
    inst.c().scale_rows_cols(ups.ups(), ups.ups())
}

/// Appends `m` random side constraints with integer coefficients in
/// `{−2,…,2}` such that `incumbent` violates at least one of them.
///
/// One uniformly chosen row gets `b_i = a_iᵀx − 1`; the others get
/// `b_i = a_iᵀx + u_i` with `u_i` uniform on `{0,1,2}`. Draws that leave the
/// continuous relaxation empty are rejected and redrawn.
pub fn gen_constraints(inst: &Instance, m: usize, seed: u64, incumbent: &[f64]) -> Result<Instance> {
    let n = inst.n();
    if incumbent.len() != n {
        return Err(Error::DimensionMismatch("incumbent length differs from n".into()));
    }
    if incumbent.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidInput("incumbent must be a 0/1 vector".into()));
    }
    if incumbent.iter().sum::<f64>() as usize != inst.s() {
        return Err(Error::InvalidInput("incumbent cardinality differs from s".into()));
    }
    if m == 0 {
        return Ok(inst.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GEN_MAX_ATTEMPTS {
        let mut rows: Vec<f64> = Vec::with_capacity((inst.m() + m) * n);
        rows.extend_from_slice(inst.a().as_slice());
        let mut b = inst.b().to_vec();
        let violated = rng.gen_range(0..m);
        for i in 0..m {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
            let ax = dot(&a, incumbent);
            let rhs = if i == violated { ax - 1.0 } else { ax + rng.gen_range(0i32..=2) as f64 };
            rows.extend_from_slice(&a);
            b.push(rhs);
        }
        let total = inst.m() + m;
        let cand = Instance::new(inst.c().clone(), inst.s(), Mat::from_vec(total, n, rows), b)?;
        if cand.relaxation_point().is_ok() {
            return Ok(cand);
        }
    }
    Err(Error::SeedExhausted { attempts: GEN_MAX_ATTEMPTS })
}
