use std::path::{Path, PathBuf};
use std::process::Command;

use gscale::report::parse_csv;
use gscale::run_args;
use serde_json::Value;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> String {
    let mut full = vec!["gscale"];
    full.extend_from_slice(args);
    match run_args(full) {
        Ok(out) => out.stdout,
        Err((code, msg)) => panic!("exit {code}: {msg}"),
    }
}

fn run_err(args: &[&str]) -> (i32, String) {
    let mut full = vec!["gscale"];
    full.extend_from_slice(args);
    run_args(full).expect_err("command should fail")
}

const DIAG3: &str = r#"{"n":3,"s":2,"C":[[2,0,0],[0,3,0],[0,0,5]]}"#;

#[test]
fn linx_identity_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "i2.json", r#"{"n":2,"s":1,"C":[[1,0],[0,1]]}"#);
    let rows = parse_csv(&run(&["bound", "--instance", p.to_str().unwrap(), "--method", "linx", "--scaling", "none"])).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].ub.abs() <= 1e-8);
    assert_eq!(rows[0].lb, 0.0);
    assert!(rows[0].gap.abs() <= 1e-8);
}

#[test]
fn ddfact_o_ignores_gamma0() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.json", &run(&["gen", "--n", "9", "--s", "4", "--m", "2", "--seed", "11"]));
    let outs: Vec<String> = ["0.25", "1", "4"]
        .iter()
        .map(|g| run(&["bound", "--instance", p.to_str().unwrap(), "--method", "ddfact", "--scaling", "o", "--gamma0", g]))
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[1], outs[2]);
}

#[test]
fn bqp_eval_integer_lift() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d3.json", DIAG3);
    let rows = parse_csv(&run(&["bound", "--instance", p.to_str().unwrap(), "--method", "bqp-eval", "--x", "1,1,0"])).unwrap();
    assert!((rows[0].ub - 6f64.ln()).abs() < 1e-11);
    let (code, _) = run_err(&["bound", "--instance", p.to_str().unwrap(), "--method", "bqp-eval"]);
    assert_eq!(code, 1);
}

#[test]
fn brute_and_heuristic_on_diag() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d3.json", DIAG3);
    let v: Value = serde_json::from_str(&run(&["brute", "--instance", p.to_str().unwrap()])).unwrap();
    assert!((v["opt_value"].as_f64().unwrap() - 15f64.ln()).abs() < 1e-14);
    assert_eq!(v["opt_sets"], serde_json::json!([[1, 2]]));
    let h: Value = serde_json::from_str(&run(&["heuristic", "--instance", p.to_str().unwrap()])).unwrap();
    assert_eq!(h["set"], serde_json::json!([1, 2]));
}

#[test]
fn fix_dominant_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let c: Vec<Vec<f64>> = (0..8).map(|i| (0..8).map(|j| if i != j { 0.0 } else if i == 2 || i == 5 { 40.0 } else { 1.0 + 0.1 * i as f64 }).collect()).collect();
    let text = serde_json::json!({"n": 8, "s": 2, "C": c}).to_string();
    let p = write(dir.path(), "dom.json", &text);
    for mode in ["o", "g"] {
        let v: Value = serde_json::from_str(&run(&["fix", "--instance", p.to_str().unwrap(), "--mode", mode])).unwrap();
        assert_eq!(v["fixed_to_one"], serde_json::json!([2, 5]));
        assert_eq!(v["fixed_count"], 8);
    }
}

#[test]
fn gen_and_report_are_reproducible() {
    let a = run(&["gen", "--n", "8", "--s", "3", "--m", "2", "--seed", "5"]);
    let b = run(&["gen", "--n", "8", "--s", "3", "--m", "2", "--seed", "5"]);
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "g.json", &a);
    let r1 = run(&["report", "--instance", p.to_str().unwrap(), "--s", "2..4"]);
    let r2 = run(&["report", "--instance", p.to_str().unwrap(), "--s", "2..4"]);
    assert_eq!(r1, r2);
    let rows = parse_csv(&r1).unwrap();
    assert_eq!(rows.len(), 3 * 2 * 2);
    assert!(rows.iter().all(|r| r.ub >= r.lb - 1e-8));
}

#[test]
fn linx_sweep_ratios_nonnegative() {
    let inst = run(&["gen", "--n", "12", "--s", "4", "--m", "3", "--seed", "1"]);
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "n12.json", &inst);
    let rows = parse_csv(&run(&["report", "--instance", p.to_str().unwrap(), "--bounds", "linx"])).unwrap();
    let g_rows: Vec<_> = rows.iter().filter(|r| r.scaling == "g").collect();
    assert!(!g_rows.is_empty());
    for r in g_rows {
        if let Some(ratio) = r.ratio {
            assert!(ratio >= -1e-6, "s={} ratio {ratio}", r.s);
        }
    }
}

#[test]
fn report_from_csv_needs_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.csv", "s,bound,scaling,ub,lb,gap,ratio,iters,seconds\n3,linx,o,4,2,2,,1,0\n3,linx,g,3.5,2,1.5,,1,0\n");
    let rows = parse_csv(&run(&["report", "--from", ok.to_str().unwrap()])).unwrap();
    assert_eq!(rows[1].ratio, Some(0.25));
    let missing = write(dir.path(), "bad.csv", "s,bound,scaling,ub,lb,gap,ratio,iters,seconds\n3,linx,o,4,2,2,,1,0\n");
    let (code, msg) = run_err(&["report", "--from", missing.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(msg.contains("missing mode data"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inst.json");
    let stdout = run(&["gen", "--n", "5", "--s", "2", "--out", out.to_str().unwrap()]);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["n"], 5);
    assert!(v.get("A").is_none());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_gscale");
    let dir = tempfile::tempdir().unwrap();
    let st = Command::new(bin).args(["bound", "--method", "nope"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&st.stderr).unwrap();
    assert_eq!(err["error"], "usage");
    // x1 + x2 + x3 ≤ 0.5 with s = 1 leaves nothing feasible
    let p = write(dir.path(), "inf.json", r#"{"n":3,"s":1,"C":[[1,0,0],[0,1,0],[0,0,1]],"A":[[1,1,1]],"b":[0.5]}"#);
    let st = Command::new(bin).args(["bound", "--instance", p.to_str().unwrap()]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&st.stderr).unwrap();
    assert_eq!(err["error"], "computation");
    let p = write(dir.path(), "d3.json", DIAG3);
    let st = Command::new(bin).args(["brute", "--instance", p.to_str().unwrap()]).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
}

#[test]
fn malformed_instances_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "asym.json", r#"{"n":2,"s":1,"C":[[1,0.5],[0,1]]}"#);
    assert_eq!(run_err(&["heuristic", "--instance", p.to_str().unwrap()]).0, 1);
    let p = write(dir.path(), "short.json", r#"{"n":3,"s":1,"C":[[1,0],[0,1]]}"#);
    assert_eq!(run_err(&["heuristic", "--instance", p.to_str().unwrap()]).0, 1);
    let p = write(dir.path(), "ab.json", r#"{"n":2,"s":1,"C":[[1,0],[0,1]],"A":[[1,1]]}"#);
    assert_eq!(run_err(&["heuristic", "--instance", p.to_str().unwrap()]).0, 1);
}
