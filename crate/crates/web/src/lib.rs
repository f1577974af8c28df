//! Browser bindings. The `*_json` functions do the work and are what the
//! native tests call; the exported wrappers only convert errors.

use serde_json::json;
use wasm_bindgen::prelude::*;

use dps_core::engine::{self, Options, Refinement};
use dps_core::explicit::{self, Arbitration};
use dps_core::generators::{self, MulticoreArch, PhilosopherArch};
use dps_core::model::{parse_system, Model, Priority, PrioritySet};

fn read(model: &str) -> Result<Model, String> {
    let m = parse_system(model).map_err(|e| e.to_string())?;
    if !m.architecture.is_deployable(&m.system) {
        return Err("architecture is not deployable".into());
    }
    Ok(m)
}

/// A benchmark model document. `family` is `philosophers` (`arch`: none,
/// cw, ccw, full) or `multicore` (`arch`: broadcast-X or local).
pub fn generate_json(family: &str, n: usize, arch: &str) -> Result<String, String> {
    let m = match family {
        "philosophers" => {
            if !(2..=12).contains(&n) {
                return Err("between 2 and 12 philosophers".into());
            }
            generators::philosophers(n, arch.parse::<PhilosopherArch>()?)
        }
        "multicore" => {
            if !(2..=6).contains(&n) {
                return Err("between 2 and 6 CPUs".into());
            }
            let arch = arch.parse::<MulticoreArch>()?;
            if matches!(arch, MulticoreArch::Broadcast(x) if x >= n) {
                return Err("broadcasting CPU out of range".into());
            }
            generators::multicore(n, n.max(3), arch)
        }
        other => return Err(format!("unknown family `{other}`")),
    };
    Ok(m.to_json())
}

/// Synthesis result JSON with an extra `table` field.
pub fn synthesize_json(model: &str, refine: bool) -> Result<String, String> {
    let m = read(model)?;
    let opts = Options { refine: if refine { Refinement::Lazy } else { Refinement::Off }, budget: None, ..Options::default() };
    let r = engine::synthesize(&m.system, &m.architecture, &m.risk, &opts).map_err(|e| e.to_string())?;
    let mut v = r.to_json(false);
    v["table"] = json!(r.to_table());
    Ok(v.to_string())
}

/// JSON lines of a distributed run, with the priorities of `result`
/// applied when it is non-empty.
pub fn simulate_json(model: &str, result: &str, steps: usize, seed: u64) -> Result<String, String> {
    let m = read(model)?;
    let mut s = m.system.clone();
    if !result.trim().is_empty() {
        let v: serde_json::Value = serde_json::from_str(result).map_err(|e| e.to_string())?;
        if v.get("refined").is_some() {
            return Err("results over refined interactions cannot be simulated here".into());
        }
        let mut p = PrioritySet::new();
        for pair in v["priorities"].as_array().ok_or("result has no priorities")? {
            let get = |k: usize| {
                pair[k].as_str().and_then(|n| s.interaction_index(n)).ok_or_else(|| format!("bad priority {pair}"))
            };
            p.insert(Priority::new(get(0)?, get(1)?));
        }
        s = s.with_priorities(&p).map_err(|e| e.to_string())?;
    }
    let trace = explicit::simulate_distributed(&s, &m.architecture, &m.risk, steps.min(1000), Arbitration::Seeded(seed));
    Ok(trace.to_json_lines(&s))
}

#[wasm_bindgen]
pub fn generate(family: &str, n: usize, arch: &str) -> Result<String, JsError> {
    generate_json(family, n, arch).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn synthesize(model: &str, refine: bool) -> Result<String, JsError> {
    synthesize_json(model, refine).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(model: &str, result: &str, steps: usize, seed: u64) -> Result<String, JsError> {
    simulate_json(model, result, steps, seed).map_err(|e| JsError::new(&e))
}
