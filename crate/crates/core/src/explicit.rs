//! Explicit-state semantics.
//!
//! Configurations are enumerated one by one. This is the reference the
//! symbolic engine is tested against, the validator for synthesized
//! priorities, and the brute-force synthesizer for tiny alphabets.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{CommArchitecture, Interaction, Priority, PrioritySet, RiskAtom, RiskSpec, System};

/// Default cap on the number of explored configurations.
pub const DEFAULT_STATE_CAP: usize = 1 << 22;

/// Largest alphabet accepted by [`brute_force_synthesize`].
pub const BRUTE_FORCE_MAX_INTERACTIONS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExplicitError {
    #[error("state capacity of {0} configurations exceeded")]
    Capacity(usize),
    #[error("brute-force synthesis is limited to {max} interactions, got {actual}")]
    TooLarge { max: usize, actual: usize },
    #[error("interaction `{0}` is not enabled")]
    NotEnabled(String),
}

/// Location and valuation of every component. Bit `k` of `valuations[i]`
/// holds variable `k` of component `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub locations: Vec<usize>,
    pub valuations: Vec<u64>,
}

impl Configuration {
    pub fn initial(s: &System) -> Configuration {
        Configuration {
            locations: s.components.iter().map(|c| c.initial_location).collect(),
            valuations: s
                .components
                .iter()
                .map(|c| c.initial_valuation.iter().enumerate().fold(0u64, |acc, (k, &b)| acc | (u64::from(b) << k)))
                .collect(),
        }
    }

    pub fn value(&self, component: usize, variable: usize) -> bool {
        self.valuations[component] >> variable & 1 == 1
    }

    /// `{component: {"location": .., "variables": {..}}}`.
    pub fn describe(&self, s: &System) -> Value {
        let mut out = serde_json::Map::new();
        for (i, c) in s.components.iter().enumerate() {
            let vars: serde_json::Map<String, Value> =
                c.variables.iter().enumerate().map(|(k, v)| (v.clone(), Value::Bool(self.value(i, k)))).collect();
            out.insert(c.name.clone(), json!({ "location": c.locations[self.locations[i]], "variables": vars }));
        }
        Value::Object(out)
    }
}

/// Joint participation: every component with `a` in its alphabet has an
/// `a`-transition out of its current location whose guard holds.
pub fn guard_enabled(s: &System, c: &Configuration, a: Interaction) -> bool {
    s.participants(a).iter().all(|&i| {
        s.components[i].outgoing(c.locations[i], a).any(|t| t.guard.eval(&mut |&v| c.value(i, v)))
    })
}

fn guard_enabled_all(s: &System, c: &Configuration) -> Vec<bool> {
    s.interactions().map(|a| guard_enabled(s, c, a)).collect()
}

/// `Σ_c`: guard-enabled interactions with no guard-enabled interaction of
/// higher priority.
pub fn globally_enabled(s: &System, c: &Configuration) -> Vec<Interaction> {
    let ge = guard_enabled_all(s, c);
    s.interactions().filter(|&a| ge[a.0] && !s.priorities().above(a).any(|t| ge[t.0])).collect()
}

pub fn deadlocked(s: &System, c: &Configuration) -> bool {
    s.interactions().all(|a| !guard_enabled(s, c, a))
}

/// Enabledness under a communication architecture. Every participant of
/// `a` must see `a` and have an enabled `a`-transition, and `a` is blocked
/// by a higher-priority interaction that has joint participation and is
/// visible to at least one participant of `a`.
pub fn distributively_enabled(s: &System, com: &CommArchitecture, c: &Configuration) -> Vec<Interaction> {
    let visible_by = |t: Interaction, j: usize| s.participants(t).iter().all(|&i| com.informs(i, j));
    let ge = guard_enabled_all(s, c);
    s.interactions()
        .filter(|&a| {
            let joint = ge[a.0] && s.participants(a).iter().all(|&j| visible_by(a, j));
            joint
                && !s
                    .priorities()
                    .above(a)
                    .any(|t| ge[t.0] && s.participants(a).iter().any(|&j| visible_by(t, j)))
        })
        .collect()
}

/// All `a`-successors of `c`, sorted. Fails if `a` is not enabled.
pub fn successors(s: &System, c: &Configuration, a: Interaction) -> Result<Vec<Configuration>, ExplicitError> {
    if !globally_enabled(s, c).contains(&a) {
        return Err(ExplicitError::NotEnabled(s.interaction_name(a).to_string()));
    }
    Ok(successors_unchecked(s, c, a))
}

/// Successors by `a` assuming joint participation, ignoring priorities.
pub fn successors_unchecked(s: &System, c: &Configuration, a: Interaction) -> Vec<Configuration> {
    let mut partial = vec![c.clone()];
    for &i in s.participants(a) {
        let comp = &s.components[i];
        let mut local: BTreeSet<(usize, u64)> = BTreeSet::new();
        for t in comp.outgoing(c.locations[i], a) {
            if !t.guard.eval(&mut |&v| c.value(i, v)) {
                continue;
            }
            let mut vals = vec![0u64];
            for (k, set) in t.update.iter().enumerate() {
                vals = vals.iter().flat_map(|&acc| set.values().map(move |b| acc | (u64::from(b) << k))).collect();
            }
            local.extend(vals.into_iter().map(|v| (t.target, v)));
        }
        partial = partial
            .iter()
            .flat_map(|p| {
                local.iter().map(move |&(l, v)| {
                    let mut q = p.clone();
                    q.locations[i] = l;
                    q.valuations[i] = v;
                    q
                })
            })
            .collect();
    }
    partial.sort();
    partial.dedup();
    partial
}

pub fn risk_holds(s: &System, risk: &RiskSpec, c: &Configuration) -> bool {
    let _ = s;
    risk.0.eval(&mut |atom| match *atom {
        RiskAtom::At { component, location } => c.locations[component] == location,
        RiskAtom::Var { component, variable } => c.value(component, variable),
    })
}

/// Reachable configurations with BFS predecessor links.
#[derive(Clone, Debug)]
pub struct ReachableSet {
    pub states: Vec<Configuration>,
    index: FxHashMap<Configuration, usize>,
    parent: Vec<Option<(usize, Interaction)>>,
    /// Number of distinct `(c, a, c')` edges explored.
    pub transitions: usize,
}

impl ReachableSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, c: &Configuration) -> bool {
        self.index.contains_key(c)
    }

    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.index.get(c).copied()
    }

    /// Shortest run from the initial configuration to state `k`.
    pub fn witness(&self, k: usize) -> Vec<WitnessStep> {
        let mut steps = Vec::new();
        let mut cur = k;
        while let Some((p, a)) = self.parent[cur] {
            steps.push(WitnessStep { via: Some(a), config: self.states[cur].clone() });
            cur = p;
        }
        steps.push(WitnessStep { via: None, config: self.states[cur].clone() });
        steps.reverse();
        steps
    }

    pub fn as_set(&self) -> BTreeSet<Configuration> {
        self.states.iter().cloned().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessStep {
    /// Interaction leading into `config`; `None` for the initial state.
    pub via: Option<Interaction>,
    pub config: Configuration,
}

/// BFS over the global semantics. `stop` is called on every state when it
/// is dequeued; returning `true` ends the search early.
fn explore(
    s: &System,
    cap: usize,
    mut stop: impl FnMut(usize, &Configuration) -> bool,
) -> Result<(ReachableSet, Option<usize>), ExplicitError> {
    let init = Configuration::initial(s);
    let mut set = ReachableSet {
        states: vec![init.clone()],
        index: FxHashMap::default(),
        parent: vec![None],
        transitions: 0,
    };
    set.index.insert(init, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(k) = queue.pop_front() {
        let c = set.states[k].clone();
        if stop(k, &c) {
            return Ok((set, Some(k)));
        }
        for a in globally_enabled(s, &c) {
            for next in successors_unchecked(s, &c, a) {
                set.transitions += 1;
                if set.index.contains_key(&next) {
                    continue;
                }
                if set.states.len() >= cap {
                    return Err(ExplicitError::Capacity(cap));
                }
                let id = set.states.len();
                set.index.insert(next.clone(), id);
                set.states.push(next);
                set.parent.push(Some((k, a)));
                queue.push_back(id);
            }
        }
    }
    Ok((set, None))
}

pub fn reachable(s: &System, cap: usize) -> Result<ReachableSet, ExplicitError> {
    explore(s, cap, |_, _| false).map(|(set, _)| set)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BadKind {
    Deadlock,
    Risk,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub safe: bool,
    /// Shortest run into a bad configuration; empty when safe.
    pub witness: Vec<WitnessStep>,
    pub kind: Option<BadKind>,
    pub explored: usize,
}

pub fn bad_kind(s: &System, risk: &RiskSpec, c: &Configuration) -> Option<BadKind> {
    if deadlocked(s, c) {
        Some(BadKind::Deadlock)
    } else if risk_holds(s, risk, c) {
        Some(BadKind::Risk)
    } else {
        None
    }
}

/// Safe iff no reachable configuration is deadlocked or risky.
pub fn check_safe(s: &System, risk: &RiskSpec, cap: usize) -> Result<Verdict, ExplicitError> {
    let mut kind = None;
    let (set, hit) = explore(s, cap, |_, c| {
        kind = bad_kind(s, risk, c);
        kind.is_some()
    })?;
    Ok(match hit {
        Some(k) => Verdict { safe: false, witness: set.witness(k), kind, explored: set.len() },
        None => Verdict { safe: true, witness: Vec::new(), kind: None, explored: set.len() },
    })
}

/// Size figures of the reachable product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SystemStats {
    pub states: usize,
    pub transitions: usize,
    pub interactions: usize,
    pub components: usize,
}

pub fn system_stats(s: &System, cap: usize) -> Result<SystemStats, ExplicitError> {
    let r = reachable(s, cap)?;
    Ok(SystemStats {
        states: r.len(),
        transitions: r.transitions,
        interactions: s.num_interactions(),
        components: s.components.len(),
    })
}

/// Enumerates strict partial orders containing the closed base priorities
/// whose pairs all respect the architecture, smallest additions first along
/// a fixed exclude-first order, and returns the additions of the first safe
/// one. `Ok(None)` means infeasible.
pub fn brute_force_synthesize(
    s: &System,
    com: &CommArchitecture,
    risk: &RiskSpec,
    cap: usize,
) -> Result<Option<PrioritySet>, ExplicitError> {
    let n = s.num_interactions();
    if n > BRUTE_FORCE_MAX_INTERACTIONS {
        return Err(ExplicitError::TooLarge { max: BRUTE_FORCE_MAX_INTERACTIONS, actual: n });
    }
    let vis = com.visibility_matrix(s);
    let base = s.priorities().clone();
    if !base.iter().all(|p| vis.allows(p)) {
        return Ok(None);
    }
    let pairs: Vec<Priority> = s
        .interactions()
        .flat_map(|l| s.interactions().map(move |h| Priority::new(l, h)))
        .filter(|p| !p.is_reflexive())
        .collect();

    struct Search<'a> {
        s: &'a System,
        risk: &'a RiskSpec,
        cap: usize,
        pairs: Vec<Priority>,
        allowed: Box<dyn Fn(Priority) -> bool + 'a>,
    }

    impl Search<'_> {
        fn run(&self, k: usize, included: &PrioritySet, excluded: &mut Vec<Priority>) -> Result<Option<PrioritySet>, ExplicitError> {
            let Some(pos) = (k..self.pairs.len()).find(|&j| !included.contains(&self.pairs[j])) else {
                let sys = self.s.with_priorities(included).expect("enumerated orders are acyclic");
                return Ok(check_safe(&sys, self.risk, self.cap)?.safe.then(|| included.clone()));
            };
            let p = self.pairs[pos];
            excluded.push(p);
            let r = self.run(pos + 1, included, excluded)?;
            excluded.pop();
            if r.is_some() {
                return Ok(r);
            }
            let mut with = included.clone();
            with.insert(p);
            let closed = with.transitive_closure();
            if closed.is_irreflexive() && closed.iter().all(|q| (self.allowed)(q) && !excluded.contains(&q)) {
                return self.run(pos + 1, &closed, excluded);
            }
            Ok(None)
        }
    }

    let search = Search { s, risk, cap, pairs, allowed: Box::new(move |p| vis.allows(p)) };
    let found = search.run(0, &base, &mut Vec::new())?;
    Ok(found.map(|all| all.iter().filter(|p| !base.contains(p)).collect()))
}

/// How the simulator resolves choices among enabled interactions and
/// among successors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arbitration {
    /// Always the least interaction index and the least successor.
    Lexicographic,
    Seeded(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationOutcome {
    Completed,
    Deadlock,
    Risk,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub config: Configuration,
    pub enabled: Vec<Interaction>,
    pub chosen: Interaction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub last: Configuration,
    pub outcome: SimulationOutcome,
}

impl Trace {
    /// One JSON object per step, then a final record with the outcome.
    pub fn to_json_lines(&self, s: &System) -> String {
        let mut out = String::new();
        for st in &self.steps {
            let rec = json!({
                "config": st.config.describe(s),
                "chosen": s.interaction_name(st.chosen),
                "enabledSet": st.enabled.iter().map(|&a| s.interaction_name(a)).collect::<Vec<_>>(),
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out.push_str(&json!({ "config": self.last.describe(s), "outcome": self.outcome }).to_string());
        out.push('\n');
        out
    }
}

/// Runs the distributed semantics for at most `steps` steps, stopping at
/// the first deadlocked or risky configuration.
pub fn simulate_distributed(
    s: &System,
    com: &CommArchitecture,
    risk: &RiskSpec,
    steps: usize,
    arbitration: Arbitration,
) -> Trace {
    let mut rng = match arbitration {
        Arbitration::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Arbitration::Lexicographic => None,
    };
    let mut c = Configuration::initial(s);
    let mut trace = Vec::new();
    for _ in 0..steps {
        let enabled = distributively_enabled(s, com, &c);
        if enabled.is_empty() || risk_holds(s, risk, &c) {
            break;
        }
        let chosen = match rng.as_mut() {
            Some(r) => *enabled.choose(r).expect("nonempty"),
            None => enabled[0],
        };
        let next = successors_unchecked(s, &c, chosen);
        let target = match rng.as_mut() {
            Some(r) => next.choose(r).expect("enabled interactions have successors").clone(),
            None => next[0].clone(),
        };
        trace.push(TraceStep { config: c, enabled, chosen });
        c = target;
    }
    let outcome = if distributively_enabled(s, com, &c).is_empty() {
        SimulationOutcome::Deadlock
    } else if risk_holds(s, risk, &c) {
        SimulationOutcome::Risk
    } else {
        SimulationOutcome::Completed
    };
    Trace { steps: trace, last: c, outcome }
}
