//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Criteria run on separate threads and are reported in order.

mod common;

use std::time::Instant;

use common::*;
use gscale_core::bqp::{bqp_hess_logups, bqp_lift_integer, bqp_value, BqpPoint};
use gscale_core::ddfact::{ddfact_gen_grad_x, ddfact_grad_ups, ddfact_value};
use gscale_core::fixing::{iterate_fixing, FixingOptions};
use gscale_core::gamma::{compute_iota, gamma_s, phi_s, supergradient};
use gscale_core::heuristic::incumbent;
use gscale_core::linx::{linx_grad_logups, linx_grad_x, linx_hess_logups, linx_value};
use gscale_core::oracle::{brute_force_opt, for_each_feasible};
use gscale_core::relax::DEFAULT_TOL;
use gscale_core::scaling::{bfgs_optimize_scaling, newton_oscaling, BfgsOptions};
use gscale_core::spectral::sym_eig;
use gscale_core::*;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ones(n: usize) -> ScalingVector {
    ScalingVector::ones(n)
}

/// 1. Integer points: linx and BQP reproduce ldet C[S,S] for any Υ.
fn integer_identities() -> Outcome {
    let t0 = Instant::now();
    let mut rng = rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=10);
        let s = rng.gen_range(1..n);
        let inst = Instance::mesp(random_psd(n, n, &mut rng), s).unwrap();
        let set = random_subset(n, s, &mut rng);
        let x = indicator(n, &set);
        let ups = ScalingVector::new(random_ups(n, 0.1, 10.0, &mut rng)).unwrap();
        let want = inst.ldet_subset(&set).unwrap();
        let lx = linx_value(&inst, &x, &ups).unwrap().value;
        let bq = bqp_value(&inst, &bqp_lift_integer(&x, s).unwrap(), &ups).unwrap().value;
        worst = worst.max((lx - want).abs()).max((bq - want).abs());
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(worst <= 1e-8 && secs < 10.0, format!("max |f − ldet| = {worst:.2e} over 200 draws, {secs:.2} s"))
}

/// 2. Every bound dominates the brute-force optimum.
fn bound_validity() -> Outcome {
    let mut rng = rng(202);
    let opts = ScalingOptions::default();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for t in 0..50 {
        let n = rng.gen_range(5..=12);
        let s = rng.gen_range(2..n - 1);
        let m = t % 6;
        let inst = random_instance(n, s, m, &mut rng);
        let opt = brute_force_opt(&inst).unwrap().opt_value;
        for kind in [BoundKind::Linx, BoundKind::Ddfact] {
            for mode in [ScalingMode::None, ScalingMode::O, ScalingMode::G] {
                match scaled_bound(&inst, kind, mode, &opts) {
                    Ok(sb) => {
                        let margin = sb.relax.valid_ub - opt;
                        worst = worst.min(margin);
                        if margin < -1e-6 {
                            failures.push(format!("#{t} {} {}", kind.name(), mode.name()));
                        }
                    }
                    Err(e) => failures.push(format!("#{t} {} {}: {e}", kind.name(), mode.name())),
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("min(valid_ub − opt) = {worst:.3e} over 300 bounds; failures {failures:?}"))
}

/// 3. Analytic derivatives against central differences.
fn derivatives() -> Outcome {
    let mut rng = rng(303);
    let h = 1e-6;
    let (mut g_worst, mut h_worst) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.gen_range(3..=8);
        let s = rng.gen_range(1..n);
        let inst = Instance::mesp(random_psd(n, n, &mut rng), s).unwrap();
        let fac = factorize(&inst);
        let x = interior_point(n, s, &mut rng);
        let ups_v = random_ups(n, 0.3, 3.0, &mut rng);
        let ups = ScalingVector::new(ups_v.clone()).unwrap();
        let psi = ups.psi().to_vec();
        let at_psi = |p: &[f64]| ScalingVector::from_psi(p.to_vec()).unwrap();

        let fd = fd_grad(|y| linx_value(&inst, y, &ups).unwrap().value, &x, h);
        g_worst = g_worst.max(rel_err(&linx_grad_x(&inst, &x, &ups).unwrap(), &fd));

        let fd = fd_grad(|p| linx_value(&inst, &x, &at_psi(p)).unwrap().value, &psi, h);
        g_worst = g_worst.max(rel_err(&linx_grad_logups(&inst, &x, &ups).unwrap(), &fd));
        let fdh = fd_jacobian(|p| linx_grad_logups(&inst, &x, &at_psi(p)).unwrap(), &psi, h);
        h_worst = h_worst.max(rel_err(linx_hess_logups(&inst, &x, &ups).unwrap().as_slice(), fdh.as_slice()));

        let fd = fd_grad(|y| ddfact_value(&inst, &fac, y, &ups).unwrap().value, &x, h);
        g_worst = g_worst.max(rel_err(&ddfact_gen_grad_x(&inst, &fac, &x, &ups).unwrap(), &fd));
        let fd = fd_grad(|u| ddfact_value(&inst, &fac, &x, &ScalingVector::new(u.to_vec()).unwrap()).unwrap().value, &ups_v, h);
        g_worst = g_worst.max(rel_err(&ddfact_grad_ups(&inst, &fac, &x, &ups).unwrap(), &fd));

        let pt = lifted_point(n, s, &mut rng);
        let fd = fd_grad(|p| bqp_value(&inst, &pt, &at_psi(p)).unwrap().value, &psi, h);
        g_worst = g_worst.max(rel_err(&gscale_core::bqp::bqp_grad_logups(&inst, &pt, &ups).unwrap(), &fd));
        let fdh = fd_jacobian(|p| gscale_core::bqp::bqp_grad_logups(&inst, &pt, &at_psi(p)).unwrap(), &psi, h);
        h_worst = h_worst.max(rel_err(bqp_hess_logups(&inst, &pt, &ups).unwrap().as_slice(), fdh.as_slice()));
    }
    outcome(
        g_worst <= 1e-5 && h_worst <= 1e-4,
        format!("gradient rel err {g_worst:.2e} (≤ 1e-5), Hessian rel err {h_worst:.2e} (≤ 1e-4), 100 points"),
    )
}

/// A point of the lifted set: a convex combination of integer lifts.
fn lifted_point(n: usize, s: usize, rng: &mut rand_chacha::ChaCha8Rng) -> BqpPoint {
    let k = 4;
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let tot: f64 = w.iter().sum();
    let mut x = vec![0.0; n];
    let mut big = Mat::zeros(n, n);
    for wi in &w {
        let v = indicator(n, &random_subset(n, s, rng));
        for i in 0..n {
            x[i] += wi / tot * v[i];
            for j in 0..n {
                big[(i, j)] += wi / tot * v[i] * v[j];
            }
        }
    }
    BqpPoint::new(x, big, s).unwrap()
}

/// 4. Convexity in log Υ: Hessians are PSD and z_linx is midpoint convex.
fn convexity() -> Outcome {
    let mut rng = rng(404);
    let mut min_eig = f64::INFINITY;
    for _ in 0..100 {
        let n = rng.gen_range(3..=8);
        let s = rng.gen_range(1..n);
        let inst = Instance::mesp(random_psd(n, n, &mut rng), s).unwrap();
        let ups = ScalingVector::new(random_ups(n, 0.1, 10.0, &mut rng)).unwrap();
        let x = interior_point(n, s, &mut rng);
        let hl = linx_hess_logups(&inst, &x, &ups).unwrap();
        let pt = lifted_point(n, s, &mut rng);
        let hb = bqp_hess_logups(&inst, &pt, &ups).unwrap();
        for h in [hl, hb] {
            min_eig = min_eig.min(*sym_eig(&h).unwrap().lambdas.last().unwrap());
        }
    }
    let opts = RelaxOptions::default();
    let mut worst_mid = f64::NEG_INFINITY;
    for t in 0..3 {
        let n = rng.gen_range(6..=9);
        let inst = random_instance(n, n / 2, if t == 2 { 2 } else { 0 }, &mut rng);
        let z = |psi: &[f64]| solve_relaxation(&inst, BoundKind::Linx, &ScalingVector::from_psi(psi.to_vec()).unwrap(), &opts).unwrap().valid_ub;
        for _ in 0..20 {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
            worst_mid = worst_mid.max(z(&mid) - 0.5 * (z(&a) + z(&b)));
        }
    }
    outcome(
        min_eig >= -1e-8 && worst_mid <= 2.0 * DEFAULT_TOL,
        format!("min Hessian eigenvalue {min_eig:.2e}; max midpoint excess {worst_mid:.2e} (≤ {:.0e})", 2.0 * DEFAULT_TOL),
    )
}

/// 5. At Υ = e the factorization bound is stationary in Υ for MESP.
fn ddfact_stationarity() -> Outcome {
    let mut rng = rng(505);
    let mut worst: f64 = 0.0;
    let mut gaps: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(5..=15);
        let s = rng.gen_range(1..n);
        let inst = Instance::mesp(random_psd(n, n, &mut rng), s).unwrap();
        let rr = solve_relaxation(&inst, BoundKind::Ddfact, &ones(n), &RelaxOptions::default()).unwrap();
        gaps = gaps.max(rr.fw_gap);
        let g = ddfact_grad_ups(&inst, &factorize(&inst), &rr.x_star, &ones(n)).unwrap();
        worst = worst.max(g.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    outcome(worst <= 1e-5 && gaps <= 1e-8, format!("max ‖g_Υ‖∞ = {worst:.2e} with FW gap ≤ {gaps:.1e}, 20 instances"))
}

/// 6. The factorization bound ignores uniform scaling.
fn ddfact_invariance() -> Outcome {
    let mut rng = rng(606);
    let (mut z_spread, mut f_spread) = (0.0f64, 0.0f64);
    for t in 0..10 {
        let n = rng.gen_range(5..=10);
        let s = rng.gen_range(1..n);
        let inst = random_instance(n, s, t % 3, &mut rng);
        let fac = factorize(&inst);
        let zs: Vec<f64> = [0.25, 1.0, 4.0]
            .iter()
            .map(|&g| solve_relaxation(&inst, BoundKind::Ddfact, &ScalingVector::uniform(n, g).unwrap(), &RelaxOptions::default()).unwrap().valid_ub)
            .collect();
        z_spread = z_spread.max(zs.iter().cloned().fold(f64::MIN, f64::max) - zs.iter().cloned().fold(f64::MAX, f64::min));
        let x = interior_point(n, s, &mut rng);
        let fs: Vec<f64> = [0.25, 1.0, 4.0]
            .iter()
            .map(|&g| ddfact_value(&inst, &fac, &x, &ScalingVector::uniform(n, g).unwrap()).unwrap().value)
            .collect();
        f_spread = f_spread.max(fs.iter().cloned().fold(f64::MIN, f64::max) - fs.iter().cloned().fold(f64::MAX, f64::min));
    }
    outcome(
        z_spread <= 2.0 * DEFAULT_TOL && f_spread <= 1e-10,
        format!("z spread {z_spread:.2e} (≤ {:.0e}), f spread {f_spread:.2e} (≤ 1e-10)", 2.0 * DEFAULT_TOL),
    )
}

/// 7. BFGS from γ*e never ends above the o-scaled bound.
fn scaling_dominance() -> Outcome {
    let mut rng = rng(707);
    let newton_relax = RelaxOptions { tol: 1e-12, ..RelaxOptions::default() };
    let mut worst = f64::NEG_INFINITY;
    let mut ratios = Vec::new();
    let mut failures = Vec::new();
    for t in 0..20 {
        let n = rng.gen_range(6..=12);
        let s = rng.gen_range(2..n - 1);
        let inst = random_instance(n, s, 1 + t % 3, &mut rng);
        let os = match newton_oscaling(&inst, BoundKind::Linx, 1.0, 1e-10, &newton_relax) {
            Ok(os) => os,
            Err(e) => {
                failures.push(format!("#{t}: {e}"));
                continue;
            }
        };
        if os.derivative.abs() >= 1e-10 {
            failures.push(format!("#{t}: |derivative| {:.1e}", os.derivative.abs()));
        }
        let start = ScalingVector::uniform(n, os.gamma).unwrap();
        let mut bo = BfgsOptions::default();
        bo.relax.warm_start = Some(os.relax.active_set.clone());
        let br = bfgs_optimize_scaling(&inst, BoundKind::Linx, &start, &bo).unwrap();
        worst = worst.max(br.z - os.z);
        if br.z > os.z + 1e-6 {
            failures.push(format!("#{t}: g {:.6} > o {:.6}", br.z, os.z));
        }
        let lb = incumbent(&inst).map(|i| i.value).unwrap_or(f64::NEG_INFINITY);
        if os.z - lb > 0.0 {
            ratios.push((os.z - br.z.min(os.z)) / (os.z - lb));
        }
    }
    ratios.sort_by(f64::total_cmp);
    let median = if ratios.is_empty() { f64::NAN } else { ratios[ratios.len() / 2] };
    outcome(
        failures.is_empty(),
        format!("max(z_g − z_o) = {worst:.2e}; median gap-decrease ratio {median:.4} (soft target > 0); failures {failures:?}"),
    )
}

/// 8. First-order accuracy of the generalized gradient at boundary points.
fn boundary_gradient() -> Outcome {
    let mut rng = rng(808);
    let mut bad = Vec::new();
    let mut worst_last: f64 = 0.0;
    let mut points = 0;
    while points < 20 {
        let n = rng.gen_range(6..=9);
        let k = n - rng.gen_range(1..=2);
        let s = rng.gen_range(2..=k - 2);
        let Ok(inst) = Instance::mesp(random_psd(n, k, &mut rng), s) else { continue };
        let fac = factorize(&inst);
        let zeros = rng.gen_range(1..=3);
        let mut x = interior_point(n, s, &mut rng);
        for i in 0..zeros {
            x[i] = 0.0;
        }
        let tot: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v *= s as f64 / tot);
        if x.iter().any(|&v| v > 1.0) {
            continue;
        }
        let ups = ScalingVector::new(random_ups(n, 0.5, 2.0, &mut rng)).unwrap();
        let Ok(f0) = ddfact_value(&inst, &fac, &x, &ups) else { continue };
        if !f0.in_domain {
            continue;
        }
        let g = ddfact_gen_grad_x(&inst, &fac, &x, &ups).unwrap();
        points += 1;
        for _ in 0..5 {
            // feasible direction: nonnegative on the zero block, sums to zero
            let mut d: Vec<f64> = (0..n).map(|i| if i < zeros { rng.gen_range(0.0..1.0) } else { rng.gen_range(-1.0..1.0) }).collect();
            let shift = d[zeros..].iter().sum::<f64>() + d[..zeros].iter().sum::<f64>();
            d[zeros..].iter_mut().for_each(|v| *v -= shift / (n - zeros) as f64);
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let res: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&t| {
                    let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b / norm).collect();
                    let fy = ddfact_value(&inst, &fac, &y, &ups).unwrap().value;
                    let lin: f64 = g.iter().zip(&d).map(|(a, b)| a * t * b / norm).sum();
                    (fy - f0.value - lin).abs() / t
                })
                .collect();
            worst_last = worst_last.max(res[2]);
            if !(res[0] >= res[1] && res[1] >= res[2] && res[2] <= 1e-2) {
                bad.push(format!("{:.2e} {:.2e} {:.2e}", res[0], res[1], res[2]));
            }
        }
    }
    outcome(bad.is_empty(), format!("100 directions at 20 boundary points; largest residual at 1e-4: {worst_last:.2e}; non-monotone {bad:?}"))
}

/// 9. Fixed variables agree with every solution that beats the incumbent.
fn fixing_soundness() -> Outcome {
    let mut rng = rng(909);
    let mut violations = Vec::new();
    let (mut fixed_o, mut fixed_g, mut max_rounds_ratio) = (0usize, 0usize, 0.0f64);
    for t in 0..50 {
        let n = rng.gen_range(5..=12);
        let s = rng.gen_range(2..n - 1);
        let inst = random_instance(n, s, t % 4, &mut rng);
        for mode in [ScalingMode::O, ScalingMode::G] {
            let rep = match iterate_fixing(&inst, &FixingOptions { mode, ..FixingOptions::default() }) {
                Ok(r) => r,
                Err(e) => {
                    violations.push(format!("#{t} {}: {e}", mode.name()));
                    continue;
                }
            };
            if rep.rounds.len() > n {
                violations.push(format!("#{t} {}: {} rounds", mode.name(), rep.rounds.len()));
            }
            max_rounds_ratio = max_rounds_ratio.max(rep.rounds.len() as f64 / n as f64);
            if mode == ScalingMode::O { fixed_o += rep.fixed_count() } else { fixed_g += rep.fixed_count() }
            for_each_feasible(&inst, None, |set, v| {
                if v > rep.lb {
                    for (i, f) in rep.fixed.iter().enumerate() {
                        if let Some(val) = f {
                            if *val != set.contains(&i) {
                                violations.push(format!("#{t} {} x{i}", mode.name()));
                            }
                        }
                    }
                }
            })
            .unwrap();
        }
    }
    outcome(
        violations.is_empty(),
        format!("100 runs; fixed o={fixed_o}, g={fixed_g}; max rounds/n {max_rounds_ratio:.2}; violations {violations:?}"),
    )
}

/// 10. Complementation identities on invertible instances.
fn complementation() -> Outcome {
    let mut rng = rng(1010);
    let (mut id_err, mut margin) = (0.0f64, f64::INFINITY);
    for t in 0..20 {
        let n = rng.gen_range(4..=11);
        let s = rng.gen_range(1..n);
        let inst = random_instance(n, s, t % 3, &mut rng);
        let opt = brute_force_opt(&inst).unwrap().opt_value;
        let (comp, shift) = complement_instance(&inst).unwrap();
        let copt = brute_force_opt(&comp).unwrap().opt_value;
        id_err = id_err.max((opt - (copt + shift)).abs());
        let rr = solve_relaxation(&comp, BoundKind::Ddfact, &ones(n), &RelaxOptions::default()).unwrap();
        margin = margin.min(rr.valid_ub + shift - opt);
    }
    outcome(
        id_err <= 1e-8 && margin >= -1e-6,
        format!("|opt − (opt_comp + ldet C)| ≤ {id_err:.2e}; min(comp bound − opt) = {margin:.3e}"),
    )
}

/// 11. The spectral truncation kernel.
fn gamma_kernel() -> Outcome {
    let mut rng = rng(1111);
    let mut nonunique = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=12);
        let s = rng.gen_range(1..=k);
        let zeros = rng.gen_range(0..=k - s);
        let mut lam: Vec<f64> = (0..k).map(|i| if i < k - zeros { rng.gen_range(0.0..1.0f64).powi(3) * 10.0 + 1e-6 } else { 0.0 }).collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        let tail = |i: usize| lam[i..].iter().sum::<f64>();
        let valid: Vec<usize> = (0..s)
            .filter(|&i| {
                let avg = tail(i) / (s - i) as f64;
                (i == 0 || lam[i - 1] > avg) && avg >= lam[i]
            })
            .collect();
        if valid.len() != 1 || compute_iota(&lam, s).unwrap() != valid[0] {
            nonunique += 1;
        }
    }
    let mut scale_err: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.gen_range(2..=10);
        let s = rng.gen_range(1..=k);
        let mut lam: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..5.0)).collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        let c: f64 = rng.gen_range(0.1..10.0);
        let scaled: Vec<f64> = lam.iter().map(|v| v * c).collect();
        scale_err = scale_err.max((phi_s(&scaled, s).unwrap() - phi_s(&lam, s).unwrap() - s as f64 * c.ln()).abs());
    }
    let mut superg: f64 = f64::NEG_INFINITY;
    for i in 0..200 {
        let n = rng.gen_range(2..=8);
        let s = rng.gen_range(1..=n);
        let kx = if i % 3 == 0 { rng.gen_range(s..=n) } else { n };
        let x = random_psd(n, kx, &mut rng);
        let y = random_psd(n, rng.gen_range(s..=n), &mut rng);
        let (gx, ge, sd) = gamma_s(&x, s).unwrap();
        let (gy, _, _) = gamma_s(&y, s).unwrap();
        let g = supergradient(&ge, &sd);
        let lin: f64 = g.as_slice().iter().zip(y.sub(&x).as_slice()).map(|(a, b)| a * b).sum();
        superg = superg.max(gy - gx - lin);
    }
    outcome(
        nonunique == 0 && scale_err <= 1e-10 && superg <= 1e-9,
        format!("ι unique in 1000/1000 spectra (misses {nonunique}); scaling err {scale_err:.1e}; max Γ(Y) − Γ(X) − ⟨G,Y−X⟩ = {superg:.1e}"),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("integer-point identities", integer_identities),
        ("bound validity vs brute force", bound_validity),
        ("derivatives vs finite differences", derivatives),
        ("convexity in log-scaling", convexity),
        ("factorization stationarity at e", ddfact_stationarity),
        ("factorization o-scaling invariance", ddfact_invariance),
        ("g-scaling dominates o-scaling", scaling_dominance),
        ("boundary generalized gradient", boundary_gradient),
        ("fixing soundness", fixing_soundness),
        ("complementation", complementation),
        ("spectral truncation kernel", gamma_kernel),
    ];
    let t0 = Instant::now();
    let results: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria.iter().map(|&(_, f)| scope.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| outcome(false, "panicked".into())))
            .collect()
    });
    let mut failed = 0;
    println!("\nrunning acceptance criteria");
    for (i, ((name, _), r)) in criteria.iter().zip(&results).enumerate() {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        if !r.pass {
            failed += 1;
        }
        println!("{tag} [{:>2}] {name}: {}", i + 1, r.detail);
    }
    println!("acceptance: {} passed, {failed} failed in {:.1} s\n", criteria.len() - failed, t0.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
