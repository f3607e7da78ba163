//! The spectral truncation function Γ_s used by the factorization bound.
//!
//! For a non-increasing spectrum `λ ∈ R^k_+` and `0 < s ≤ k` there is a unique
//! split index `ι ∈ {0, …, s−1}` with
//!
//! ```text
//! λ_ι > (1/(s−ι)) · Σ_{ℓ>ι} λ_ℓ ≥ λ_{ι+1}        (λ_0 := +∞, 1-based λ)
//! ```
//!
//! The top `ι` eigenvalues enter the log-sum individually and the tail is
//! replaced by `s−ι` copies of its average:
//!
//! ```text
//! φ_s(λ) = Σ_{ℓ≤ι} log λ_ℓ + (s−ι)·log( Σ_{ℓ>ι} λ_ℓ / (s−ι) )
//! ```
//!
//! `Γ_s(X) = φ_s(λ(X))`. The weights `β_i = 1/λ_i` (`i ≤ ι`) and
//! `β_i = (s−ι)/Σ_{ℓ>ι} λ_ℓ` (`i > ι`) give the supergradient
//! `Q·Diag(β)·Qᵀ`. Zero eigenvalues take the tail weight, which is the
//! smallest admissible choice and the one that yields the generalized gradient
//! of the factorization objective at boundary points.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::spectral::{rank_threshold, sym_eig, SpectralData};

#[derive(Clone, Debug)]
pub struct GammaEval {
    /// Spectrum, non-increasing, with sub-threshold entries set to zero.
    pub lambdas: Vec<f64>,
    /// Zero-based count of eigenvalues kept individually (the split index).
    pub iota: usize,
    pub phi: f64,
    pub beta: Vec<f64>,
    /// Number of nonzero eigenvalues.
    pub r: usize,
    pub s: usize,
}

fn positive_count(lambdas: &[f64]) -> usize {
    lambdas.iter().filter(|&&l| l > 0.0).count()
}

/// Split index of the spectral truncation. `lambdas` must be non-increasing
/// and nonnegative with at least `s` positive entries.
pub fn compute_iota(lambdas: &[f64], s: usize) -> Result<usize> {
    let k = lambdas.len();
    if s == 0 || s > k {
        return Err(Error::InvalidInput(alloc::format!("need 0 < s <= k (s={s}, k={k})")));
    }
    let r = positive_count(lambdas);
    if r < s {
        return Err(Error::RankDeficient { rank: r, required: s });
    }
    // tail[i] = Σ_{ℓ ≥ i} λ_ℓ (0-based)
    let mut tail = alloc::vec![0.0; k + 1];
    for i in (0..k).rev() {
        tail[i] = tail[i + 1] + lambdas[i];
    }
    let mut best = (0usize, f64::INFINITY);
    for iota in 0..s {
        let avg = tail[iota] / (s - iota) as f64;
        let upper_ok = iota == 0 || lambdas[iota - 1] > avg;
        let lower_ok = avg >= lambdas[iota];
        if upper_ok && lower_ok {
            return Ok(iota);
        }
        // rounding can break both sides at a near-tie; keep the least violated
        let viol = (if upper_ok { 0.0 } else { avg - lambdas[iota - 1] })
            + (if lower_ok { 0.0 } else { lambdas[iota] - avg });
        if viol < best.1 {
            best = (iota, viol);
        }
    }
    Ok(best.0)
}

fn phi_with_iota(lambdas: &[f64], s: usize, iota: usize) -> (f64, f64) {
    let tail: f64 = lambdas[iota..].iter().sum();
    let m = (s - iota) as f64;
    let head: f64 = lambdas[..iota].iter().map(|&l| libm::log(l)).sum();
    (head + m * libm::log(tail / m), tail)
}

/// `φ_s(λ)` for a non-increasing nonnegative spectrum.
pub fn phi_s(lambdas: &[f64], s: usize) -> Result<f64> {
    let iota = compute_iota(lambdas, s)?;
    Ok(phi_with_iota(lambdas, s, iota).0)
}

/// Evaluates φ_s and the β weights on a spectrum that is already sorted and
/// thresholded.
pub fn eval_spectrum(lambdas: Vec<f64>, s: usize) -> Result<GammaEval> {
    let iota = compute_iota(&lambdas, s)?;
    let (phi, tail) = phi_with_iota(&lambdas, s, iota);
    let tail_beta = (s - iota) as f64 / tail;
    let beta = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| if i < iota { 1.0 / l } else { tail_beta })
        .collect();
    let r = positive_count(&lambdas);
    Ok(GammaEval { lambdas, iota, phi, beta, r, s })
}

/// Sorts-and-thresholds helper: eigenvalues at or below the rank threshold
/// become exactly zero.
pub fn threshold_spectrum(lambdas: &[f64], dim: usize) -> Vec<f64> {
    let thr = rank_threshold(dim, lambdas.first().copied().unwrap_or(0.0));
    lambdas.iter().map(|&l| if l > thr { l } else { 0.0 }).collect()
}

/// `Γ_s(X)` together with the eigendecomposition it was computed from.
pub fn gamma_s(x: &Mat, s: usize) -> Result<(f64, GammaEval, SpectralData)> {
    let sd = sym_eig(x)?;
    let lambdas = threshold_spectrum(&sd.lambdas, x.rows());
    let ge = eval_spectrum(lambdas, s)?;
    Ok((ge.phi, ge, sd))
}

/// β weights of a [`GammaEval`].
pub fn beta_vector(ge: &GammaEval) -> Vec<f64> {
    ge.beta.clone()
}

/// Supergradient representative `Q·Diag(β)·Qᵀ` of Γ_s at the evaluated point.
pub fn supergradient(ge: &GammaEval, sd: &SpectralData) -> Mat {
    sd.weighted(&ge.beta)
}
