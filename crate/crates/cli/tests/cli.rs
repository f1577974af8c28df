use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dps")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let p = dir.join(name);
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", p.to_str().unwrap()]);
    let o = dps(&all);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    p
}

#[test]
fn ten_philosophers_counter_clockwise() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen(dir.path(), "p.json", &["philosophers", "10", "--arch", "ccw"]);
    let res = dir.path().join("r.json");
    let o = dps(&["synthesize", m.to_str().unwrap(), "--out", res.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&res).unwrap()).unwrap();
    assert_eq!(r["status"], "success");
    assert_eq!(r["priorities"].as_array().unwrap().len(), 10);
    assert!(r["stats"].get("timeMs").is_none());

    let o = dps(&["validate", m.to_str().unwrap(), res.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json(&o)["ok"], true);

    let o = dps(&["simulate", m.to_str().unwrap(), "--result", res.to_str().unwrap(), "--steps", "40", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 41);
}

#[test]
fn ten_philosophers_clockwise_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen(dir.path(), "p.json", &["philosophers", "10", "--arch", "cw"]);
    let o = dps(&["synthesize", m.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    assert_eq!(r["status"], "infeasible");
    assert_eq!(r["evidence"]["kind"], "initialInAttractor");
}

#[test]
fn check_reports_deadlock_witness() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen(dir.path(), "p.json", &["philosophers", "3", "--arch", "none"]);
    let o = dps(&["check", m.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["safe"], false);
    assert_eq!(v["kind"], "deadlock");
    // Three left forks taken, from the initial configuration.
    assert_eq!(v["witness"].as_array().unwrap().len(), 4);
}

#[test]
fn validate_rejects_a_weakened_result() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen(dir.path(), "m.json", &["multicore", "--cpus", "4", "--arch", "broadcast-A"]);
    let o = dps(&["synthesize", m.to_str().unwrap(), "--timing"]);
    assert_eq!(code(&o), 0);
    let mut r = json(&o);
    assert!(r["stats"]["timeMs"].is_u64());
    r["priorities"] = Value::Array(vec![]);
    let res = dir.path().join("weak.json");
    std::fs::write(&res, r.to_string()).unwrap();
    let o = dps(&["validate", m.to_str().unwrap(), res.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["safe"], false);
}

#[test]
fn refined_results_validate() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen(dir.path(), "m.json", &["multicore", "--cpus", "4", "--arch", "broadcast-A"]);
    let res = dir.path().join("r.json");
    let o = dps(&["synthesize", m.to_str().unwrap(), "--refine", "eager", "--out", res.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&res).unwrap()).unwrap();
    assert!(r["refined"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains('@')));
    let o = dps(&["validate", m.to_str().unwrap(), res.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn table_output_lists_controllers() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen(dir.path(), "p.json", &["philosophers", "3"]);
    let o = dps(&["synthesize", m.to_str().unwrap(), "--format", "table"]);
    assert_eq!(code(&o), 0);
    let t = String::from_utf8_lossy(&o.stdout);
    assert!(t.starts_with("status: success"));
    assert!(t.contains("Phil0:") && t.contains(" < "));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen(dir.path(), "m.json", &["multicore", "--cpus", "4", "--arch", "broadcast-B"]);
    let a = dps(&["synthesize", m.to_str().unwrap()]);
    let b = dps(&["synthesize", m.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn input_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"components\": [").unwrap();
    assert_eq!(code(&dps(&["synthesize", bad.to_str().unwrap()])), 3);
    assert_eq!(code(&dps(&["synthesize", "/nonexistent/model.json"])), 3);
    assert_eq!(code(&dps(&["synthesize", "--refine", "sometimes", "x.json"])), 3);
    assert_eq!(code(&dps(&["gen", "philosophers", "1"])), 3);
    assert_eq!(code(&dps(&["gen", "multicore", "--cpus", "4", "--arch", "broadcast-G"])), 3);

    // A model whose architecture lacks a mandated pair.
    let m = gen(dir.path(), "p.json", &["philosophers", "2"]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
    doc["architecture"] = Value::Array(vec![]);
    std::fs::write(&m, doc.to_string()).unwrap();
    let o = dps(&["check", m.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not deployable"));
}

#[test]
fn generated_documents_have_expected_sizes() {
    let dir = tempfile::tempdir().unwrap();
    for (args, comps) in [
        (vec!["robots", "4", "12"], 4),
        (vec!["multicore", "--cpus", "8", "--arch", "local"], 16),
        (vec!["random", "--seed", "9"], 0),
    ] {
        let p = gen(dir.path(), "g.json", &args);
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        let n = v["components"].as_array().unwrap().len();
        if comps > 0 {
            assert_eq!(n, comps);
        }
        assert_ne!(code(&dps(&["check", p.to_str().unwrap()])), 3);
    }
}
