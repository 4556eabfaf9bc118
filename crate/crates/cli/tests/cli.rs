use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn failover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_failover")).args(args).output().unwrap()
}

fn ok_stdout(args: &[&str]) -> String {
    let out = failover(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok_stdout(args)).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn gen_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let p = path.to_str().unwrap();
    ok_stdout(&["gen", "--dist", "uniform:0:0.5", "--n", "100", "--B", "1", "--seed", "7", "--out", p]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let sizes = v["sizes"].as_array().unwrap();
    assert_eq!(sizes.len(), 100);
    assert!(sizes.iter().all(|s| (0.0..=0.5).contains(&s.as_f64().unwrap())));
    // Same seed, same file.
    let again = ok_stdout(&["gen", "--dist", "uniform:0:0.5", "--n", "100", "--B", "1", "--seed", "7"]);
    assert_eq!(again, std::fs::read_to_string(&path).unwrap());

    let text = ok_stdout(&["gen", "--dist", "point:0.25", "--n", "3", "--m", "4", "--format", "text"]);
    assert_eq!(text, "1 4\n0.25\n0.25\n0.25\n");
    assert_eq!(failover(&["gen", "--dist", "uniform:0:0.7", "--n", "3", "--B", "1"]).status.code(), Some(2));
}

#[test]
fn run_smoke_per_algorithm() {
    let common = ["--dist", "uniform:0:0.5", "--n", "400", "--m", "100", "--seed", "5"];
    for alg in ["worstcase", "lex-first-fit", "spread-first", "best-fit-pair", "offline-min"] {
        let mut args = vec!["run", "--alg", alg];
        args.extend(common);
        let r = json(&args);
        assert_eq!(r["feasible"], true, "{alg}");
        assert_eq!(r["algorithm"], alg);
        assert_eq!(r["seed"], 5);
    }
    let r = json(&["run", "--alg", "small", "--dist", "uniform:0:0.2", "--n", "300", "--m", "64", "--tail-index", "5"]);
    assert_eq!(r["feasible"], true);
    assert!(r["utilization"].as_f64().unwrap() > 0.0);

    let r = json(&["run", "--alg", "stochastic", "--dist", "uniform:0:0.5", "--m", "100", "--seed", "1"]);
    assert_eq!(r["feasible"], true);
    assert!(r["machines_opened"].as_u64().unwrap() <= 100);

    let r = json(&["run", "--alg", "offline-min", "--dist", "uniform:0:0.5", "--n", "200", "--epsilon", "0.4"]);
    assert_eq!(r["feasible"], true);
    let b = &r["breakdown"];
    let parts: u64 = ["large", "template", "fallback"].iter().map(|k| b[k].as_u64().unwrap()).sum();
    assert_eq!(r["machines"].as_u64().unwrap(), parts);
    assert!(r["lp_value"].as_f64().unwrap() <= parts as f64);
}

#[test]
fn run_reads_instances_and_reports_csv() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "bad.txt", "1 4\n0.4\n0.4\n0.4\n");
    let r = json(&["run", "--alg", "worstcase", "--instance", &inst]);
    assert_eq!(r["stop_index"], 2);
    assert!((r["utilization"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    let csv = ok_stdout(&["run", "--alg", "worstcase", "--instance", &inst, "--format", "csv"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("algorithm,instance_digest,m,B,"));
    assert!(lines[1].starts_with("worstcase,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // No machine budget for an online algorithm.
    let no_m = write(dir.path(), "no_m.txt", "1 -\n0.1\n");
    assert_eq!(failover(&["run", "--alg", "worstcase", "--instance", &no_m]).status.code(), Some(2));
    assert_eq!(failover(&["run", "--alg", "worstcase", "--instance", "/nonexistent"]).status.code(), Some(2));
    let big = write(dir.path(), "big.txt", "1 4\n0.4\n");
    assert_eq!(failover(&["run", "--alg", "small", "--instance", &big]).status.code(), Some(2));
    let nine = write(dir.path(), "nine.txt", &format!("1 -\n{}", "0.1\n".repeat(9)));
    assert_eq!(failover(&["oracle", "--instance", &nine]).status.code(), Some(3));
    assert_eq!(failover(&["bogus"]).status.code(), Some(2));
}

#[test]
fn bench_is_deterministic_across_jobs() {
    let args = |jobs: &'static str| {
        vec!["bench", "--alg", "worstcase,stochastic,lex-first-fit", "--m", "40,90", "--trials", "3", "--seed", "9", "--jobs", jobs]
    };
    let one = ok_stdout(&args("1"));
    let four = ok_stdout(&args("4"));
    assert_eq!(one, four);
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines[0], "m,trial,alg,utilization,ratio");
    assert_eq!(lines.len(), 1 + 2 * 3 * 3);
    assert!(lines[1].starts_with("40,0,worstcase,"));
    for row in &lines[1..] {
        let ratio: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&ratio));
    }
    assert_eq!(ok_stdout(&["bench", "--trials", "0"]), "m,trial,alg,utilization,ratio\n");
    assert_eq!(failover(&["bench", "--alg", "offline-min"]).status.code(), Some(2));
}

#[test]
fn converge_wrapper() {
    let csv = ok_stdout(&["converge", "--dist", "point:0.5", "--B", "1", "--T", "4,8,64"]);
    assert_eq!(csv, "T,machines,ratio,diff\n4,8,2.000000,\n8,16,2.000000,0.000000\n64,128,2.000000,0.000000\n");
    assert_eq!(ok_stdout(&["converge", "--dist", "uniform:0:0.5", "--T"]), "T,machines,ratio,diff\n");
    let brute = ok_stdout(&["converge", "--dist", "uniform:0:0.5", "--T", "6", "--method", "brute"]);
    assert!(brute.starts_with("T,machines,ratio,diff\n6,"));
}

#[test]
fn oracle_wrapper() {
    let dir = tempfile::tempdir().unwrap();
    let quarters = write(dir.path(), "q.txt", &format!("1 4\n{}", "0.25\n".repeat(6)));
    let r = json(&["oracle", "--instance", &quarters]);
    assert_eq!(r["opt_mach"], 4);
    let r = json(&["oracle", "--instance", &quarters, "--mode", "prefix"]);
    assert_eq!(r["prefix"], 6);
    assert!((r["utilization"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    let r = json(&["oracle", "--instance", &quarters, "--mode", "prefix", "--m", "2"]);
    assert_eq!(r["prefix"], 2);
}

#[test]
fn lp_wrapper() {
    let dir = tempfile::tempdir().unwrap();
    let halves = write(dir.path(), "h.txt", "2 -\n0.5\n0.5\n0.5\n");
    let r = json(&["lp", "--instance", &halves, "--types", "by-size", "--tol", "1e-9"]);
    assert!((r["objective"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!(r["iterations"].is_u64());
    assert!(!r["columns"].as_array().unwrap().is_empty());
    let per = json(&["lp", "--instance", &halves, "--types", "per-demand"]);
    assert!((per["objective"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn every_online_algorithm_stays_feasible_under_fuzz() {
    // bench rechecks every trial and exits 4 on an infeasible assignment.
    for (b, dist) in [("1", "uniform:0:0.5"), ("1.3", "uniform:0.05:0.65"), ("2", "discrete:0.1,0.9:0.7,0.3")] {
        let out = failover(&[
            "bench", "--alg", "worstcase,stochastic,lex-first-fit,spread-first,best-fit-pair",
            "--m", "6,17,60", "--trials", "20", "--B", b, "--dist", dist, "--jobs", "4",
        ]);
        assert!(out.status.success(), "B = {b}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = failover(&["bench", "--alg", "small", "--m", "30,80", "--trials", "20", "--dist", "uniform:0:0.2", "--tail-index", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
