//! The `adiabat` binary: exit codes, config precedence, outputs and determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn adiabat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiabat")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&adiabat(&[])), 2);
    assert_eq!(code(&adiabat(&["no-such-command"])), 2);
    assert_eq!(code(&adiabat(&["verify-algebra", "--samples", "many"])), 2);

    let empty = dir.path().join("empty.json");
    fs::write(&empty, "{}").unwrap();
    assert_eq!(code(&adiabat(&["--config", s(&empty)])), 2, "config without a command");

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"command": "verify-algebra", "smaples": 10}"#).unwrap();
    let o = adiabat(&["--config", s(&unknown)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("smaples"));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\"command\": ").unwrap();
    assert_eq!(code(&adiabat(&["--config", s(&broken)])), 2);

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&adiabat(&["solve-maximal", "-i", s(&missing)])), 2);
    assert_eq!(code(&adiabat(&["solve-maximal", "--n", "2"])), 2);
    assert_eq!(code(&adiabat(&["--help"])), 0);
}

#[test]
fn failed_checks_exit_1_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = adiabat(&["-o", s(dir.path()), "solve-maximal", "--n", "5", "--max-steps", "5"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    assert_eq!(r["pass"], false);
    assert_eq!(r["command"], "solve-maximal");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.json");
    fs::write(&cfg, r#"{"command": "verify-algebra", "samples": 20, "seed": 7, "output_dir": "from-config"}"#).unwrap();

    let o = adiabat(&["--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir.path().join("from-config"));
    assert_eq!(r["seed"], 7);
    assert_eq!(r["data"]["samples"], 20);

    let out = dir.path().join("from-flags");
    let o = adiabat(&["--config", s(&cfg), "--seed", "9", "-o", s(&out), "verify-algebra", "--samples", "30"]);
    assert_eq!(code(&o), 0);
    let r = report(&out);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["data"]["samples"], 30);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "verify-algebra");
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = adiabat(&["--seed", "3", "--threads", threads, "-o", s(&out), "verify-algebra", "--samples", "40"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
        fs::read(out.join("report.json")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
}

#[test]
fn solve_maximal_writes_monotone_trace_and_section() {
    let dir = tempfile::tempdir().unwrap();
    let o = adiabat(&["-o", s(dir.path()), "solve-maximal", "--n", "5", "--encoding", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("step,time,volume,mnorm,margin"));
    let vols: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(vols.len() >= 2);
    for w in vols.windows(2) {
        assert!(w[1] >= w[0] - 1e-10 * w[0].abs(), "{} -> {}", w[0], w[1]);
    }
    let h = adiabat::io::read_section(&dir.path().join("section.json")).unwrap();
    assert_eq!(h.grid.shape, vec![5, 5, 5]);

    // the written section is a valid input and is already maximal
    let again = dir.path().join("again");
    let o = adiabat(&["-o", s(&again), "solve-maximal", "-i", s(&dir.path().join("section.json"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn report_aggregates_runs() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good");
    let bad = dir.path().join("bad");
    assert_eq!(code(&adiabat(&["-o", s(&good), "verify-algebra", "--samples", "20"])), 0);
    assert_eq!(code(&adiabat(&["-o", s(&bad), "solve-maximal", "--n", "5", "--max-steps", "3"])), 1);

    let agg = dir.path().join("agg");
    assert_eq!(code(&adiabat(&["-o", s(&agg), "report", s(&good)])), 0);
    let o = adiabat(&["-o", s(&agg), "report", s(&good), s(&bad.join("report.json"))]);
    assert_eq!(code(&o), 1);
    let checks = fs::read_to_string(agg.join("checks.csv")).unwrap();
    assert!(checks.starts_with("source,command,name,samples,value,bound,tolerance,pass\n"));
    assert!(checks.contains(",verify-algebra,"));
    assert!(checks.contains(",solve-maximal,converged,"));
    let data = fs::read_to_string(agg.join("data.csv")).unwrap();
    assert!(data.contains(",verify-algebra,samples,20"));
    let r = report(&agg);
    assert_eq!(r["checks"][0]["value"], 1.0);
}
