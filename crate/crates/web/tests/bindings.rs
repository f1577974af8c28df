use dps_web::{generate_json, simulate_json, synthesize_json};
use serde_json::Value;

#[test]
fn generate_then_synthesize_philosophers() {
    let model = generate_json("philosophers", 3, "ccw").unwrap();
    let r: Value = serde_json::from_str(&synthesize_json(&model, false).unwrap()).unwrap();
    assert_eq!(r["status"], "success");
    assert_eq!(r["priorities"].as_array().unwrap().len(), 3);
    assert!(r["table"].as_str().unwrap().contains("Phil0:"));
}

#[test]
fn infeasible_ring_reports_evidence() {
    let model = generate_json("philosophers", 3, "none").unwrap();
    let r: Value = serde_json::from_str(&synthesize_json(&model, false).unwrap()).unwrap();
    assert_eq!(r["status"], "infeasible");
    assert_eq!(r["evidence"]["kind"], "initialInAttractor");
}

#[test]
fn simulation_with_and_without_fix() {
    let model = generate_json("multicore", 4, "broadcast-A").unwrap();
    let result = synthesize_json(&model, false).unwrap();
    let fixed = simulate_json(&model, &result, 300, 7).unwrap();
    let lines: Vec<Value> = fixed.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 301);
    assert_eq!(lines.last().unwrap()["outcome"], "completed");
    // Same seed, same run.
    assert_eq!(fixed, simulate_json(&model, &result, 300, 7).unwrap());
    assert!(simulate_json(&model, "", 10, 1).is_ok());
}

#[test]
fn bad_inputs_are_errors() {
    assert!(generate_json("philosophers", 1, "ccw").is_err());
    assert!(generate_json("philosophers", 3, "sideways").is_err());
    assert!(generate_json("multicore", 4, "broadcast-F").is_err());
    assert!(synthesize_json("{", false).is_err());
}
