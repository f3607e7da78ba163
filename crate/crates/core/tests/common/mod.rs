#![allow(dead_code)]

use gscale_core::heuristic::incumbent;
use gscale_core::oracle::brute_force_opt;
use gscale_core::{gen_constraints, Instance, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `B Bᵀ / k` with `B` an `n × k` matrix of uniform(−1, 1) entries.
pub fn random_psd(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Mat {
    let b = Mat::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0));
    let mut c = b.matmul(&b.transpose()).scale(1.0 / k as f64);
    c.symmetrize();
    c
}

/// Random full-rank instance; with `m > 0` the side constraints cut off the
/// greedy incumbent of the unconstrained problem. Draws without an integer
/// feasible set are redrawn.
pub fn random_instance(n: usize, s: usize, m: usize, rng: &mut ChaCha8Rng) -> Instance {
    let c = random_psd(n, n, rng);
    let inst = Instance::mesp(c, s).unwrap();
    if m == 0 {
        return inst;
    }
    let inc = incumbent(&inst).unwrap();
    loop {
        let cand = gen_constraints(&inst, m, rng.gen(), &inc.x).unwrap();
        if brute_force_opt(&cand).is_ok() {
            return cand;
        }
    }
}

pub fn random_subset(n: usize, s: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut set = idx[..s].to_vec();
    set.sort_unstable();
    set
}

pub fn indicator(n: usize, set: &[usize]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for &i in set {
        x[i] = 1.0;
    }
    x
}

pub fn random_ups(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| (rng.gen_range(lo.ln()..hi.ln()) as f64).exp()).collect()
}

/// Random point with `eᵀx = s` and every entry in `(0, 1)`.
pub fn interior_point(n: usize, s: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
        let t: f64 = w.iter().sum();
        let x: Vec<f64> = w.iter().map(|v| v * s as f64 / t).collect();
        if x.iter().all(|&v| v > 0.0 && v < 1.0) {
            return x;
        }
    }
}

/// Central difference of a scalar function along each coordinate.
pub fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let dn = f(&y);
            y[i] = x[i];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

/// Central difference of a vector function; column `j` is `∂g/∂x_j`.
pub fn fd_jacobian(g: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Mat {
    let n = x.len();
    let mut y = x.to_vec();
    let mut out = Mat::zeros(n, n);
    for j in 0..n {
        y[j] = x[j] + h;
        let up = g(&y);
        y[j] = x[j] - h;
        let dn = g(&y);
        y[j] = x[j];
        for i in 0..n {
            out[(i, j)] = (up[i] - dn[i]) / (2.0 * h);
        }
    }
    out
}

/// `‖a − b‖_∞ / max(1, ‖b‖_∞)`
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
    diff / scale
}
