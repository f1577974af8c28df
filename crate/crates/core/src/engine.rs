//! Distributed priority synthesis: the search over priority variables with
//! diagnosis-based fixing.

use std::collections::BTreeSet;
use std::time::Duration;

use rustc_hash::FxHashMap;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;
use web_time::Instant;

use crate::attractor::{self, AttractorStats};
use crate::bdd::{Bdd, BddError, DEFAULT_CAPACITY};
use crate::explicit::{self, Arbitration, ExplicitError, SimulationOutcome, DEFAULT_STATE_CAP};
use crate::fixer::{self, FixError, FixOutcome, FixStats};
use crate::game::{GameArena, SymbolicGame};
use crate::model::{CommArchitecture, Interaction, ModelError, Priority, PrioritySet, RiskSpec, System, VisibilityMatrix};
use crate::refine::{self, Refined};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Refinement {
    #[default]
    Off,
    Lazy,
    Eager,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GuidanceMode {
    #[default]
    Off,
    /// Fixes with the fewest new priorities.
    Rp1,
    /// Branch on core-derived variables first.
    Rp2,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    pub overapprox: bool,
    pub refine: Refinement,
    pub guidance: GuidanceMode,
    /// Explicit state cap used by validation.
    pub state_cap: usize,
    pub node_capacity: usize,
    /// Wall-clock budget; `None` searches to completion.
    pub budget: Option<Duration>,
    /// Re-encode after every fix and check that no former error point
    /// still enters the attractor.
    pub check_fixes: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            overapprox: false,
            refine: Refinement::Off,
            guidance: GuidanceMode::Off,
            state_cap: DEFAULT_STATE_CAP,
            node_capacity: DEFAULT_CAPACITY,
            budget: Some(Duration::from_secs(150)),
            check_fixes: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("communication architecture is not deployable: {0}")]
    NotDeployable(String),
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error(transparent)]
    Fix(#[from] FixError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Success,
    Infeasible,
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    /// The initial state lies in the nested risk attractor.
    InitialInAttractor { attractor_configurations: u64 },
    /// Every assignment of the priority variables was refuted.
    SearchExhausted { nodes: usize },
    /// The given priorities already violate the architecture.
    ExistingPriorities(Vec<Priority>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EngineStats {
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub sat_calls: usize,
    pub nodes: usize,
    pub fixes: usize,
    pub fix_checks: usize,
    pub fix_check_failures: usize,
    pub refinements: usize,
    #[serde(skip)]
    pub time_ms: u128,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub status: Status,
    /// System the priorities refer to; refined when refinement ran.
    pub system: System,
    /// `𝒫_d+`: the new priorities.
    pub added: PrioritySet,
    pub refinement: Refined,
    pub evidence: Option<Evidence>,
    pub stats: EngineStats,
}

impl SynthesisResult {
    /// System with the new priorities applied.
    pub fn fixed_system(&self) -> System {
        self.system.with_priorities(&self.added).expect("synthesized priorities are acyclic")
    }

    pub fn to_json(&self, timing: bool) -> Value {
        let s = &self.system;
        let pairs = |ps: &mut dyn Iterator<Item = Priority>| -> Vec<Value> {
            ps.map(|p| {
                let (l, h) = s.priority_name(p);
                json!([l, h])
            })
            .collect()
        };
        let mut out = serde_json::Map::new();
        out.insert("status".into(), json!(self.status));
        out.insert("priorities".into(), Value::Array(pairs(&mut self.added.iter())));
        let mut controllers = serde_json::Map::new();
        if self.status == Status::Success {
            for (i, ps) in s.project_controllers(&self.added) {
                controllers.insert(s.components[i].name.clone(), Value::Array(pairs(&mut ps.into_iter())));
            }
        }
        out.insert("controllers".into(), Value::Object(controllers));
        if !self.refinement.split.is_empty() {
            out.insert("refined".into(), json!(s.interaction_names()));
        }
        if let Some(e) = &self.evidence {
            let v = match e {
                Evidence::InitialInAttractor { attractor_configurations } => {
                    json!({ "kind": "initialInAttractor", "attractorConfigurations": attractor_configurations })
                }
                Evidence::SearchExhausted { nodes } => json!({ "kind": "searchExhausted", "nodes": nodes }),
                Evidence::ExistingPriorities(ps) => {
                    json!({ "kind": "existingPriorities", "violations": pairs(&mut ps.iter().copied()) })
                }
            };
            out.insert("evidence".into(), v);
        }
        let mut stats = serde_json::to_value(self.stats).expect("plain struct");
        if timing {
            stats["timeMs"] = json!(self.stats.time_ms as u64);
        }
        out.insert("stats".into(), stats);
        Value::Object(out)
    }

    /// Controller tables, one block per component.
    pub fn to_table(&self) -> String {
        let s = &self.system;
        let mut out = format!("status: {}\n", json!(self.status).as_str().unwrap_or_default());
        if self.status == Status::Success {
            for (i, ps) in s.project_controllers(&self.added) {
                out.push_str(&format!("{}:\n", s.components[i].name));
                if ps.is_empty() {
                    out.push_str("  (unrestricted)\n");
                }
                for p in ps {
                    let (l, h) = s.priority_name(p);
                    out.push_str(&format!("  {l} < {h}\n"));
                }
            }
        }
        out
    }
}

/// Variables of the search: architecture-respecting pairs of distinct
/// interactions, lexicographic by `(low, high)`.
pub fn priority_variables(s: &System, vis: &VisibilityMatrix) -> Vec<Priority> {
    s.interactions()
        .flat_map(|l| s.interactions().map(move |h| Priority::new(l, h)))
        .filter(|p| !p.is_reflexive() && vis.allows(*p))
        .collect()
}

/// First unassigned variable: guidance order first, then `vars` order.
pub fn choose_free_variable(
    vars: &[Priority],
    assigned: &dyn Fn(&Priority) -> bool,
    guidance: &[Priority],
) -> Option<Priority> {
    guidance.iter().chain(vars).find(|p| !assigned(p)).copied()
}

#[derive(Clone, Debug)]
enum NodeInfo {
    Safe,
    Pruned,
    Fixed(PrioritySet),
    Open,
}

enum Outcome {
    Success(PrioritySet),
    Conflict,
    Exhausted,
}

struct Search<'a> {
    vis: VisibilityMatrix,
    game: SymbolicGame,
    opts: &'a Options,
    start: Instant,
    vars: Vec<Priority>,
    base: PrioritySet,
    memo: FxHashMap<PrioritySet, NodeInfo>,
    guidance: Vec<Priority>,
    core_interactions: BTreeSet<Interaction>,
    stats: EngineStats,
    base_attractor: Option<u64>,
}

const GC_THRESHOLD: usize = 1 << 21;

impl Search<'_> {
    fn out_of_time(&self) -> bool {
        self.opts.budget.is_some_and(|b| self.start.elapsed() > b)
    }

    fn add_attr_stats(&mut self, s: AttractorStats) {
        self.stats.outer_iters += s.outer_iters;
        self.stats.inner_iters += s.inner_iters;
    }

    fn safe_under(&mut self, p: &PrioritySet) -> Result<bool, EngineError> {
        let arena = self.game.arena(p);
        let reach = self.game.reachable(&arena)?;
        let bad = arena.bad(&mut self.game);
        Ok(self.game.mgr.and(reach, bad).is_false())
    }

    fn evaluate(&mut self, p: &PrioritySet) -> Result<NodeInfo, EngineError> {
        self.game.maybe_collect(GC_THRESHOLD, &mut []);
        let arena = self.game.arena(p);
        let reach = self.game.reachable(&arena)?;
        let bad = arena.bad(&mut self.game);
        if self.game.mgr.and(reach, bad).is_false() {
            return Ok(NodeInfo::Safe);
        }
        let pruned = attractor::prune(&mut self.game, &arena, reach);
        let mut nested = attractor::nested_risk_attractor(&mut self.game, &pruned, None)?;
        self.add_attr_stats(nested.stats);
        if attractor::infeasible_at_base(&mut self.game, arena.init, nested.attractor) {
            if p == &self.base {
                self.base_attractor = Some(self.game.count_configurations(nested.attractor) as u64);
            }
            return Ok(NodeInfo::Pruned);
        }
        let rounds = if self.opts.overapprox { 8 } else { 1 };
        for _ in 0..rounds {
            let cubes = fixer::extract_candidates(&mut self.game, nested.bad_entering);
            if cubes.is_empty() {
                break;
            }
            let formula = fixer::compile_clauses(&cubes, p, &self.vis);
            let mut fs = FixStats::default();
            let r = fixer::resolve_fix(&formula, &self.vis, self.opts.guidance == GuidanceMode::Rp1, &mut fs)?;
            self.stats.sat_calls += fs.sat_calls;
            match r {
                FixOutcome::Fixed { added, model } => {
                    let cand = p.union(&added).transitive_closure();
                    if self.opts.check_fixes {
                        self.stats.fix_checks += 1;
                        let raw = p.union(&model);
                        let well_formed = raw.is_transitive() && raw.is_irreflexive() && raw.iter().all(|q| self.vis.allows(q));
                        if !well_formed || !fix_is_sound(&mut self.game, &cand, nested.bad_entering, nested.attractor) {
                            self.stats.fix_check_failures += 1;
                        }
                    }
                    if cand.is_irreflexive() && cand.iter().all(|q| self.vis.allows(q)) && self.safe_under(&cand)? {
                        self.stats.fixes += 1;
                        return Ok(NodeInfo::Fixed(cand.iter().filter(|q| !self.base.contains(q)).collect()));
                    }
                }
                FixOutcome::NoFix(g) => {
                    if self.opts.guidance == GuidanceMode::Rp2 {
                        for q in g.preferred {
                            if !self.guidance.contains(&q) {
                                self.guidance.push(q);
                            }
                        }
                    }
                    self.core_interactions.extend(g.interactions);
                }
            }
            if !self.opts.overapprox {
                break;
            }
            let seed = attractor::overapproximate(&mut self.game, nested.attractor, nested.bad_entering);
            if seed == nested.attractor {
                break;
            }
            nested = attractor::nested_risk_attractor(&mut self.game, &pruned, Some(seed))?;
            self.add_attr_stats(nested.stats);
            if attractor::infeasible_at_base(&mut self.game, arena.init, nested.attractor) {
                break;
            }
        }
        Ok(NodeInfo::Open)
    }

    fn dfs(&mut self, trues: &PrioritySet, falses: &mut Vec<Priority>) -> Result<Outcome, EngineError> {
        if self.out_of_time() {
            return Ok(Outcome::Exhausted);
        }
        let p = self.base.union(trues).transitive_closure();
        if !p.is_irreflexive() || p.iter().any(|q| !self.vis.allows(q) || falses.contains(&q)) {
            return Ok(Outcome::Conflict);
        }
        self.stats.nodes += 1;
        let info = match self.memo.get(&p) {
            Some(i) => i.clone(),
            None => {
                let i = self.evaluate(&p)?;
                self.memo.insert(p.clone(), i.clone());
                i
            }
        };
        match info {
            NodeInfo::Safe => return Ok(Outcome::Success(p.iter().filter(|q| !self.base.contains(q)).collect())),
            NodeInfo::Fixed(x) => return Ok(Outcome::Success(x)),
            NodeInfo::Pruned => return Ok(Outcome::Conflict),
            NodeInfo::Open => {}
        }
        let assigned = |q: &Priority| p.contains(q) || falses.contains(q);
        let Some(v) = choose_free_variable(&self.vars, &assigned, &self.guidance) else {
            return Ok(Outcome::Conflict);
        };
        let mut with = trues.clone();
        with.insert(v);
        match self.dfs(&with, falses)? {
            Outcome::Conflict => {}
            other => return Ok(other),
        }
        falses.push(v);
        let r = self.dfs(trues, falses);
        falses.pop();
        r
    }
}

/// No control move from a former error point enters the attractor once
/// `fixed` is in place.
pub fn fix_is_sound(g: &mut SymbolicGame, fixed: &PrioritySet, bad_entering: Bdd, attractor: Bdd) -> bool {
    let t = g.control_relation(fixed);
    let src = g.exists_primed(bad_entering);
    let into = g.prime(attractor);
    g.mgr.and_all([t, src, into]).is_false()
}

struct Run {
    status: Status,
    added: PrioritySet,
    evidence: Option<Evidence>,
    stats: EngineStats,
    core_interactions: BTreeSet<Interaction>,
}

fn run_once(s: &System, com: &CommArchitecture, risk: &RiskSpec, opts: &Options, start: Instant) -> Result<Run, EngineError> {
    let vis = com.visibility_matrix(s);
    let base = s.priorities().clone();
    let violating: Vec<Priority> = base.iter().filter(|p| !vis.allows(*p)).collect();
    if !violating.is_empty() {
        return Ok(Run {
            status: Status::Infeasible,
            added: PrioritySet::new(),
            evidence: Some(Evidence::ExistingPriorities(violating)),
            stats: EngineStats::default(),
            core_interactions: BTreeSet::new(),
        });
    }
    let game = SymbolicGame::with_capacity(s, &vis, risk, opts.node_capacity)?;
    let mut search = Search {
        vars: priority_variables(s, &vis),
        vis,
        game,
        opts,
        start,
        base,
        memo: FxHashMap::default(),
        guidance: Vec::new(),
        core_interactions: BTreeSet::new(),
        stats: EngineStats::default(),
        base_attractor: None,
    };
    let outcome = search.dfs(&PrioritySet::new(), &mut Vec::new())?;
    let (status, added, evidence) = match outcome {
        Outcome::Success(x) => (Status::Success, x, None),
        Outcome::Exhausted => (Status::Exhausted, PrioritySet::new(), None),
        Outcome::Conflict => {
            let ev = match search.base_attractor {
                Some(n) => Evidence::InitialInAttractor { attractor_configurations: n },
                None => Evidence::SearchExhausted { nodes: search.stats.nodes },
            };
            (Status::Infeasible, PrioritySet::new(), Some(ev))
        }
    };
    Ok(Run { status, added, evidence, stats: search.stats, core_interactions: search.core_interactions })
}

/// Synthesizes priorities making `s` safe under `com`.
pub fn synthesize(s: &System, com: &CommArchitecture, risk: &RiskSpec, opts: &Options) -> Result<SynthesisResult, EngineError> {
    let start = Instant::now();
    let violations = com.deployability_violations(s);
    if let Some(v) = violations.first() {
        return Err(EngineError::NotDeployable(format!(
            "{:?}: `{}` must inform `{}`",
            v.kind, s.components[v.informer].name, s.components[v.informee].name
        )));
    }
    let mut refinement = match opts.refine {
        Refinement::Eager => refine::refine_all(s)?,
        _ => Refined::identity(s),
    };
    let mut total = EngineStats::default();
    loop {
        let run = run_once(&refinement.system, com, risk, opts, start)?;
        total.outer_iters += run.stats.outer_iters;
        total.inner_iters += run.stats.inner_iters;
        total.sat_calls += run.stats.sat_calls;
        total.nodes += run.stats.nodes;
        total.fixes += run.stats.fixes;
        total.fix_checks += run.stats.fix_checks;
        total.fix_check_failures += run.stats.fix_check_failures;
        let lazy_retry = opts.refine == Refinement::Lazy
            && run.status == Status::Infeasible
            && matches!(run.evidence, Some(Evidence::SearchExhausted { .. }));
        if lazy_retry {
            let mut targets = refinement.split.clone();
            targets.extend(run.core_interactions.iter().map(|&a| refinement.origin[a.0]));
            let next = refine::refine_alphabet(s, &targets)?;
            if next.system.num_interactions() > refinement.system.num_interactions() {
                refinement = next;
                total.refinements += 1;
                continue;
            }
        }
        total.time_ms = start.elapsed().as_millis();
        return Ok(SynthesisResult {
            status: run.status,
            system: refinement.system.clone(),
            added: run.added,
            refinement,
            evidence: run.evidence,
            stats: total,
        });
    }
}

/// Outcome of an independent re-check of a priority set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validation {
    pub acyclic: bool,
    pub architecture_violations: Vec<Priority>,
    /// `None` when neither check could be completed.
    pub safe: Option<bool>,
    /// Whether safety was decided symbolically (state cap exceeded).
    pub symbolic: bool,
    pub witness: Vec<explicit::WitnessStep>,
    pub simulation: Option<SimulationOutcome>,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.acyclic
            && self.architecture_violations.is_empty()
            && self.safe == Some(true)
            && self.simulation != Some(SimulationOutcome::Deadlock)
            && self.simulation != Some(SimulationOutcome::Risk)
    }
}

/// Re-checks the new priorities `added` on `s`.
pub fn validate_result(s: &System, com: &CommArchitecture, risk: &RiskSpec, added: &PrioritySet, cap: usize) -> Validation {
    let all = s.priorities().union(added).transitive_closure();
    let acyclic = all.is_irreflexive();
    let architecture_violations: Vec<Priority> = all.iter().filter(|&p| !com.visible(s, p.high, p.low)).collect();
    let mut v = Validation { acyclic, architecture_violations, safe: None, symbolic: false, witness: Vec::new(), simulation: None };
    if !acyclic {
        return v;
    }
    let fixed = s.with_priorities(added).expect("acyclic");
    match explicit::check_safe(&fixed, risk, cap) {
        Ok(verdict) => {
            v.safe = Some(verdict.safe);
            v.witness = verdict.witness;
        }
        Err(ExplicitError::Capacity(_)) => {
            v.symbolic = true;
            let vis = com.visibility_matrix(&fixed);
            if let Ok(mut g) = SymbolicGame::new(&fixed, &vis, risk) {
                let arena: GameArena = g.arena(fixed.priorities());
                if let Ok(reach) = g.reachable(&arena) {
                    let bad = arena.bad(&mut g);
                    v.safe = Some(g.mgr.and(reach, bad).is_false());
                }
            }
        }
        Err(_) => {}
    }
    v.simulation = Some(explicit::simulate_distributed(&fixed, com, risk, 200, Arbitration::Lexicographic).outcome);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Component, Expr, Transition, ValueSet};

    fn ia(k: usize) -> Interaction {
        Interaction(k)
    }

    /// `c` leads to a dead end unless `a` is preferred.
    fn sample() -> System {
        let t = |label: usize, target: usize| Transition { source: 0, guard: Expr::tt(), label: ia(label), update: vec![ValueSet::ANY], target };
        let comp = Component::new("C", vec!["l".into(), "end".into()], vec!["x".into()], vec![t(0, 0), t(1, 1)], 0, vec![false]).unwrap();
        System::new(vec![comp], vec!["a".into(), "c".into()], PrioritySet::new()).unwrap()
    }

    #[test]
    fn fixes_single_component() {
        let s = sample();
        let com = CommArchitecture::fully_connected(1);
        let r = synthesize(&s, &com, &RiskSpec::none(), &Options::default()).unwrap();
        assert_eq!(r.status, Status::Success);
        assert_eq!(r.added, [Priority::new(ia(1), ia(0))].into_iter().collect());
        assert!(validate_result(&s, &com, &RiskSpec::none(), &r.added, DEFAULT_STATE_CAP).ok());
        let j = r.to_json(false);
        assert_eq!(j["priorities"], json!([["c", "a"]]));
        assert_eq!(j["controllers"]["C"], json!([["c", "a"]]));
        assert!(j["stats"].get("timeMs").is_none());
        assert!(r.to_json(true)["stats"].get("timeMs").is_some());
    }

    #[test]
    fn safe_system_needs_nothing() {
        let s = sample().with_priorities(&[Priority::new(ia(1), ia(0))].into_iter().collect()).unwrap();
        let com = CommArchitecture::fully_connected(1);
        let r = synthesize(&s, &com, &RiskSpec::none(), &Options::default()).unwrap();
        assert_eq!(r.status, Status::Success);
        assert!(r.added.is_empty());
        assert_eq!(r.stats.nodes, 1);
    }

    #[test]
    fn variable_order() {
        let vars = vec![Priority::new(ia(0), ia(1)), Priority::new(ia(1), ia(0))];
        let none = |_: &Priority| false;
        assert_eq!(choose_free_variable(&vars, &none, &[]), Some(vars[0]));
        assert_eq!(choose_free_variable(&vars, &none, &[vars[1]]), Some(vars[1]));
        let all = |_: &Priority| true;
        assert_eq!(choose_free_variable(&vars, &all, &[]), None);
    }
}
