use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gscale_core::bqp::{bqp_lift_integer, bqp_value};
use gscale_core::fixing::{iterate_fixing, FixingOptions};
use gscale_core::heuristic::incumbent;
use gscale_core::oracle::{brute_force_partial, merge};
use gscale_core::scaling::{BfgsOptions, ScalingMode, ScalingOptions};
use gscale_core::{complement_instance, gen_constraints, scaled_bound, BoundKind, Error as CoreError, Instance, Mat, RelaxOptions, ScalingVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{instance_json, load_instance};
use crate::report::{attach_ratios, parse_csv, write_csv, GapRow};

#[derive(Parser, Debug)]
#[command(name = "gscale", version, about = "Scaled upper bounds, variable fixing and exact search for constrained maximum-entropy sampling")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Instance JSON file.
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Frank-Wolfe gap tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Tolerance on the scaling derivative.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub opttol: f64,
    #[arg(long = "max-bfgs", global = true, default_value_t = 10)]
    pub max_bfgs: usize,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Fill the seconds column with wall-clock times (otherwise 0, keeping output reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Linx,
    Ddfact,
    DdfactComp,
    BqpEval,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Linx => "linx",
            Method::Ddfact => "ddfact",
            Method::DdfactComp => "ddfact-comp",
            Method::BqpEval => "bqp-eval",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scaling {
    None,
    O,
    G,
}

impl From<Scaling> for ScalingMode {
    fn from(s: Scaling) -> Self {
        match s {
            Scaling::None => ScalingMode::None,
            Scaling::O => ScalingMode::O,
            Scaling::G => ScalingMode::G,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixMode {
    O,
    G,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Upper bound rows (CSV) for one method and scaling, optionally over an s-sweep.
    Bound {
        #[arg(long, value_enum, default_value_t = Method::Linx)]
        method: Method,
        #[arg(long, value_enum, default_value_t = Scaling::None)]
        scaling: Scaling,
        /// Start of the Newton search for γ.
        #[arg(long, default_value_t = 1.0)]
        gamma0: f64,
        /// Cardinalities: `k`, `a..b` (inclusive) or `a,b,c`; defaults to the file's s.
        #[arg(long)]
        s: Option<String>,
        /// 0/1 point for bqp-eval, comma separated.
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<f64>>,
    },
    /// γ* from Newton and the BFGS scaling vector, as JSON.
    ScaleOpt {
        #[arg(long, value_enum, default_value_t = Method::Linx)]
        method: Method,
        #[arg(long, default_value_t = 1.0)]
        gamma0: f64,
        #[arg(long)]
        s: Option<usize>,
    },
    /// Iterated variable fixing, as JSON.
    Fix {
        #[arg(long, value_enum, default_value_t = FixMode::G)]
        mode: FixMode,
        #[arg(long = "rounds-cap")]
        rounds_cap: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
    },
    /// Greedy plus local search incumbent, as JSON.
    Heuristic {
        #[arg(long)]
        s: Option<usize>,
    },
    /// Random instance with seeded side constraints, as instance JSON.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        m: usize,
    },
    /// Exact optimum by enumeration, as JSON.
    Brute {
        #[arg(long)]
        s: Option<usize>,
    },
    /// o- and g-scaled gap rows with decrease ratios over an s-sweep.
    Report {
        /// Bounds to sweep, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "linx,ddfact")]
        bounds: Vec<Method>,
        /// Cardinalities; defaults to 2..n−2.
        #[arg(long)]
        s: Option<String>,
        /// Read rows from an earlier CSV instead of computing them.
        #[arg(long)]
        from: Option<PathBuf>,
    },
}

/// What a command produced: the main payload and any side notes for stderr.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub notes: Vec<String>,
}

pub fn parse_sweep(text: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("bad s list {text:?}"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(num).collect()
}

fn instance(g: &Global) -> CliResult<Instance> {
    match &g.instance {
        Some(p) => load_instance(p),
        None => Err(CliError::Usage("--instance is required".into())),
    }
}

fn with_s(inst: &Instance, s: Option<usize>) -> CliResult<Instance> {
    match s {
        Some(s) if s != inst.s() => Ok(inst.with_s(s)?),
        _ => Ok(inst.clone()),
    }
}

fn scaling_options(g: &Global, gamma0: f64) -> ScalingOptions {
    let relax = RelaxOptions { tol: g.tol, ..RelaxOptions::default() };
    ScalingOptions {
        gamma0,
        deriv_tol: g.opttol,
        newton_relax_tol: (g.tol * 1e-4).max(1e-13),
        bfgs: BfgsOptions { max_steps: g.max_bfgs, relax, ..BfgsOptions::default() },
    }
}

fn lower_bound(inst: &Instance) -> CliResult<f64> {
    match incumbent(inst) {
        Ok(inc) => Ok(inc.value),
        Err(CoreError::NoFeasibleSolution) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e.into()),
    }
}

/// One row: the bound at cardinality `inst.s()` under `mode`.
pub fn bound_row(inst: &Instance, method: Method, mode: Scaling, g: &Global, gamma0: f64, x: Option<&[f64]>) -> CliResult<GapRow> {
    let t0 = Instant::now();
    let opts = scaling_options(g, gamma0);
    let mut lb = None;
    let (ub, iters) = match method {
        Method::Linx | Method::Ddfact => {
            let kind = if method == Method::Linx { BoundKind::Linx } else { BoundKind::Ddfact };
            let sb = scaled_bound(inst, kind, mode.into(), &opts)?;
            (sb.z, sb.relax.iterations)
        }
        Method::DdfactComp => {
            let (comp, shift) = complement_instance(inst)?;
            let sb = scaled_bound(&comp, BoundKind::Ddfact, mode.into(), &opts)?;
            (sb.z + shift, sb.relax.iterations)
        }
        Method::BqpEval => {
            let x = x.ok_or_else(|| CliError::Usage("bqp-eval needs --x".into()))?;
            if x.len() != inst.n() {
                return Err(CliError::Usage(format!("--x has {} entries, n = {}", x.len(), inst.n())));
            }
            let pt = bqp_lift_integer(x, inst.s())?;
            let ups = match mode {
                Scaling::None => ScalingVector::ones(inst.n()),
                _ => ScalingVector::uniform(inst.n(), gamma0)?,
            };
            // at an integer lift the objective is ldet C[S,S] itself, a lower bound when x is feasible
            let feasible = inst.satisfies_side_constraints(x, 1e-9);
            lb = Some(if feasible { inst.ldet_subset(&pt_set(x)).unwrap_or(f64::NEG_INFINITY) } else { f64::NEG_INFINITY });
            (bqp_value(inst, &pt, &ups)?.value, 0)
        }
    };
    let lb = match lb {
        Some(v) => v,
        None => lower_bound(inst)?,
    };
    let secs = if g.timing { t0.elapsed().as_secs_f64() } else { 0.0 };
    Ok(GapRow::new(inst.s(), method.name(), ScalingMode::from(mode).name(), ub, lb, iters, secs))
}

fn pt_set(x: &[f64]) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i] == 1.0).collect()
}

/// Drops cardinalities whose relaxation is empty when more than one is requested.
fn feasible_sweep(inst: &Instance, ss: Vec<usize>, notes: &mut Vec<String>) -> CliResult<Vec<usize>> {
    if ss.len() < 2 {
        return Ok(ss);
    }
    let mut keep = Vec::new();
    for s in ss {
        match with_s(inst, Some(s))?.relaxation_point() {
            Ok(_) => keep.push(s),
            Err(CoreError::Infeasible) => notes.push(format!("s={s} skipped: relaxation is infeasible")),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(keep)
}

fn sweep_rows(inst: &Instance, ss: &[usize], jobs: &[(Method, Scaling)], g: &Global, gamma0: f64, x: Option<&[f64]>) -> CliResult<Vec<GapRow>> {
    let tasks: Vec<(usize, Method, Scaling)> = ss.iter().flat_map(|&s| jobs.iter().map(move |&(m, sc)| (s, m, sc))).collect();
    tasks
        .par_iter()
        .map(|&(s, m, sc)| bound_row(&with_s(inst, Some(s))?, m, sc, g, gamma0, x))
        .collect()
}

fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> Mat {
    let b = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut c = b.matmul(&b.transpose()).scale(1.0 / n as f64);
    c.symmetrize();
    c
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    let g = &cli.global;
    if !(g.tol > 0.0) || !(g.opttol > 0.0) {
        return Err(CliError::Usage("--tol and --opttol must be positive".into()));
    }
    let mut out = Output::default();
    match &cli.cmd {
        Cmd::Bound { method, scaling, gamma0, s, x } => {
            let inst = instance(g)?;
            let ss = match s {
                Some(text) => parse_sweep(text)?,
                None => vec![inst.s()],
            };
            let ss = feasible_sweep(&inst, ss, &mut out.notes)?;
            let rows = sweep_rows(&inst, &ss, &[(*method, *scaling)], g, *gamma0, x.as_deref())?;
            out.stdout = write_csv(&rows);
        }
        Cmd::ScaleOpt { method, gamma0, s } => {
            let inst = with_s(&instance(g)?, *s)?;
            let kind = match method {
                Method::Linx => BoundKind::Linx,
                Method::Ddfact => BoundKind::Ddfact,
                _ => return Err(CliError::Usage("scale-opt supports linx and ddfact".into())),
            };
            let opts = scaling_options(g, *gamma0);
            let none = scaled_bound(&inst, kind, ScalingMode::None, &opts)?;
            let o = scaled_bound(&inst, kind, ScalingMode::O, &opts)?;
            let gs = scaled_bound(&inst, kind, ScalingMode::G, &opts)?;
            let v = json!({
                "bound": kind.name(),
                "s": inst.s(),
                "gamma_star": o.gamma,
                "z_none": none.z,
                "z_o": o.z,
                "z_g": gs.z,
                "bfgs_steps": gs.bfgs_steps,
                "upsilon": gs.ups.ups(),
            });
            out.stdout = serde_json::to_string_pretty(&v).unwrap() + "\n";
        }
        Cmd::Fix { mode, rounds_cap, s } => {
            let inst = with_s(&instance(g)?, *s)?;
            let mode = match mode {
                FixMode::O => ScalingMode::O,
                FixMode::G => ScalingMode::G,
            };
            let opts = FixingOptions { mode, scaling: scaling_options(g, 1.0), rounds_cap: *rounds_cap, ..FixingOptions::default() };
            let rep = iterate_fixing(&inst, &opts)?;
            let certs: Vec<_> = rep
                .certificates
                .iter()
                .map(|c| {
                    json!({
                        "index": c.index,
                        "value": c.value as u8,
                        "bound": c.source.name(),
                        "ub": finite_or_null(c.ub),
                        "multiplier": finite_or_null(c.multiplier),
                        "lb": c.lb,
                        "round": c.round,
                    })
                })
                .collect();
            let rounds: Vec<_> = rep
                .rounds
                .iter()
                .map(|r| {
                    let b: Vec<_> = r.bounds.iter().map(|b| json!({"bound": b.source.name(), "ub": b.ub, "fixed": b.fixed})).collect();
                    json!({"round": r.round, "remaining": r.remaining, "newly_fixed": r.newly_fixed, "bounds": b})
                })
                .collect();
            let v = json!({
                "mode": mode.name(),
                "n": inst.n(),
                "s": inst.s(),
                "lb": finite_or_null(rep.lb),
                "incumbent": rep.incumbent,
                "fixed_to_zero": rep.fixed_to_zero(),
                "fixed_to_one": rep.fixed_to_one(),
                "fixed_count": rep.fixed_count(),
                "rounds": rep.rounds.len(),
                "round_detail": rounds,
                "certificates": certs,
            });
            out.notes = rep.notes.clone();
            out.stdout = serde_json::to_string_pretty(&v).unwrap() + "\n";
        }
        Cmd::Heuristic { s } => {
            let inst = with_s(&instance(g)?, *s)?;
            let inc = incumbent(&inst)?;
            let v = json!({"s": inst.s(), "set": inc.set, "value": inc.value, "feasible": inc.feasible});
            out.stdout = serde_json::to_string_pretty(&v).unwrap() + "\n";
        }
        Cmd::Gen { n, s, m } => {
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let c = random_psd(*n, &mut rng);
            let mut inst = Instance::mesp(c, *s)?;
            if *m > 0 {
                let inc = incumbent(&inst)?;
                inst = gen_constraints(&inst, *m, g.seed, &inc.x)?;
            }
            out.stdout = instance_json(&inst) + "\n";
        }
        Cmd::Brute { s } => {
            let inst = with_s(&instance(g)?, *s)?;
            let parts: Vec<_> = (0..inst.n())
                .into_par_iter()
                .map(|i| brute_force_partial(&inst, i))
                .collect::<Result<Vec<_>, _>>()?;
            let r = merge(parts.into_iter().flatten())?;
            let v = json!({"s": inst.s(), "opt_value": r.opt_value, "opt_sets": r.opt_sets, "feasible_count": r.feasible_count});
            out.stdout = serde_json::to_string_pretty(&v).unwrap() + "\n";
        }
        Cmd::Report { bounds, s, from } => {
            let mut rows = match from {
                Some(p) => parse_csv(&std::fs::read_to_string(p)?)?,
                None => {
                    let inst = instance(g)?;
                    let ss = match s {
                        Some(text) => parse_sweep(text)?,
                        None if inst.n() >= 4 => (2..=inst.n() - 2).collect(),
                        None => vec![inst.s()],
                    };
                    if bounds.contains(&Method::BqpEval) {
                        return Err(CliError::Usage("report sweeps linx, ddfact and ddfact-comp".into()));
                    }
                    let ss = feasible_sweep(&inst, ss, &mut out.notes)?;
                    let jobs: Vec<(Method, Scaling)> = bounds.iter().flat_map(|&m| [(m, Scaling::O), (m, Scaling::G)]).collect();
                    sweep_rows(&inst, &ss, &jobs, g, 1.0, None)?
                }
            };
            let summary = attach_ratios(&mut rows)?;
            out.stdout = write_csv(&rows);
            out.notes.push(summary.to_string());
        }
    }
    Ok(out)
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

/// Parses arguments and runs; used by the binary and by tests.
pub fn run_args<I, T>(args: I) -> Result<Output, (i32, String)>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => (0, e.to_string()),
        _ => (1, CliError::Usage(e.to_string().trim().to_string()).to_json()),
    })?;
    let out = run(&cli).map_err(|e| (e.exit_code(), e.to_json()))?;
    if let Some(path) = &cli.global.out {
        std::fs::write(path, &out.stdout).map_err(|e| (1, CliError::from(e).to_json()))?;
        return Ok(Output { stdout: String::new(), notes: out.notes });
    }
    Ok(out)
}
