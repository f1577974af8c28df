//! Turning bad-entering transitions into priority fixes.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::bdd::Bdd;
use crate::game::{GameContext, SymbolicGame};
use crate::model::{Interaction, Priority, PrioritySet, VisibilityMatrix};
use crate::sat::{Lit, SatOutcome, Solver, Var};

/// A group of bad-entering transitions sharing the chosen interaction and
/// the set of visible enabled alternatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RiskEdgeCube {
    pub chosen: Interaction,
    pub alternatives: BTreeSet<Interaction>,
    /// Source states of the group.
    pub sources: Bdd,
}

impl RiskEdgeCube {
    pub fn candidates(&self) -> impl Iterator<Item = Priority> + '_ {
        self.alternatives.iter().map(move |&t| Priority::new(self.chosen, t))
    }
}

/// Groups `𝒯_f` by `(chosen, alternatives)`, ordered by chosen index and
/// then by the alternative bit pattern.
pub fn extract_candidates(g: &mut SymbolicGame, tf: Bdd) -> Vec<RiskEdgeCube> {
    if tf.is_false() {
        return Vec::new();
    }
    let keep: Vec<u32> =
        g.ctx.code.iter().chain(&g.ctx.vis).map(|&k| GameContext::next(k)).collect();
    let drop: Vec<u32> = (0..g.mgr.num_vars()).filter(|v| !keep.contains(v)).collect();
    let drop_cube = g.mgr.var_set(&drop);
    let sig = g.mgr.exists(tf, drop_cube);
    let ncode = g.ctx.code.len();
    let mut out = Vec::new();
    for m in g.mgr.minterms(sig, &keep) {
        let code = (0..ncode).fold(0usize, |acc, b| acc | usize::from(m[b]) << b);
        let alternatives: BTreeSet<Interaction> =
            (0..g.ctx.num_interactions).filter(|&t| t != code && m[ncode + t]).map(Interaction).collect();
        let lits: Vec<(u32, bool)> = keep.iter().copied().zip(m.iter().copied()).collect();
        let cube = g.mgr.cube(&lits);
        let edges = g.mgr.and(tf, cube);
        let sources = g.exists_primed(edges);
        out.push(RiskEdgeCube { chosen: Interaction(code), alternatives, sources });
    }
    out.sort_by(|a, b| (a.chosen, &a.alternatives).cmp(&(b.chosen, &b.alternatives)));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ClauseFamily {
    Candidate,
    Existing,
    Irreflexive,
    Transitivity,
    Architecture,
    Communication,
}

/// Which selector guards a clause.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Group {
    Cube(usize),
    Existing(Priority),
    Family(ClauseFamily),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub family: ClauseFamily,
    group: Group,
    /// `(variable, polarity)`; the clause holds if any literal does.
    pub lits: Vec<(Priority, bool)>,
}

/// The clause system for one diagnosis round.
#[derive(Clone, Debug)]
pub struct FixFormula {
    pub clauses: Vec<Clause>,
    pub cubes: Vec<(Interaction, BTreeSet<Interaction>)>,
    pub candidates: BTreeSet<Priority>,
    pub used: BTreeSet<Interaction>,
    existing: PrioritySet,
}

impl FixFormula {
    pub fn counts(&self) -> BTreeMap<ClauseFamily, usize> {
        let mut m = BTreeMap::new();
        for c in &self.clauses {
            *m.entry(c.family).or_insert(0) += 1;
        }
        m
    }

    /// Evaluates the formula under the assignment making exactly `p` true.
    /// Returns the family of the first violated clause.
    pub fn evaluate(&self, p: &PrioritySet) -> Result<(), ClauseFamily> {
        match self.clauses.iter().find(|c| !c.lits.iter().any(|&(v, pol)| p.contains(&v) == pol)) {
            Some(c) => Err(c.family),
            None => Ok(()),
        }
    }
}

/// Compiles the six clause families.
pub fn compile_clauses(cubes: &[RiskEdgeCube], existing: &PrioritySet, vis: &VisibilityMatrix) -> FixFormula {
    let mut clauses = Vec::new();
    let mut used = BTreeSet::new();
    let mut candidates = BTreeSet::new();
    let mut sigs: Vec<(Interaction, BTreeSet<Interaction>)> = Vec::new();
    for c in cubes {
        let sig = (c.chosen, c.alternatives.clone());
        if !sigs.contains(&sig) {
            sigs.push(sig);
        }
    }
    for (k, (chosen, alts)) in sigs.iter().enumerate() {
        used.insert(*chosen);
        used.extend(alts.iter().copied());
        let lits: Vec<(Priority, bool)> = alts.iter().map(|&t| (Priority::new(*chosen, t), true)).collect();
        candidates.extend(lits.iter().map(|&(p, _)| p));
        clauses.push(Clause { family: ClauseFamily::Candidate, group: Group::Cube(k), lits });
    }
    for p in existing.iter() {
        used.insert(p.low);
        used.insert(p.high);
        clauses.push(Clause { family: ClauseFamily::Existing, group: Group::Existing(p), lits: vec![(p, true)] });
    }
    let u: Vec<Interaction> = used.iter().copied().collect();
    let fam = |f| Group::Family(f);
    for &s in &u {
        clauses.push(Clause {
            family: ClauseFamily::Irreflexive,
            group: fam(ClauseFamily::Irreflexive),
            lits: vec![(Priority::new(s, s), false)],
        });
    }
    for &a in &u {
        for &b in &u {
            for &c in &u {
                if a == b || b == c {
                    continue;
                }
                clauses.push(Clause {
                    family: ClauseFamily::Transitivity,
                    group: fam(ClauseFamily::Transitivity),
                    lits: vec![(Priority::new(a, b), false), (Priority::new(b, c), false), (Priority::new(a, c), true)],
                });
            }
        }
    }
    for &a in &u {
        for &b in &u {
            if a != b && !vis.visible(b, a) {
                clauses.push(Clause {
                    family: ClauseFamily::Architecture,
                    group: fam(ClauseFamily::Architecture),
                    lits: vec![(Priority::new(a, b), false)],
                });
                for &c in &u {
                    if c != a && c != b && vis.visible(c, a) && vis.visible(b, c) {
                        clauses.push(Clause {
                            family: ClauseFamily::Communication,
                            group: fam(ClauseFamily::Communication),
                            lits: vec![(Priority::new(a, c), false), (Priority::new(c, b), false)],
                        });
                    }
                }
            }
        }
    }
    FixFormula { clauses, cubes: sigs, candidates, used, existing: existing.clone() }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixOutcome {
    /// `added` are the true candidate variables outside the existing set;
    /// `model` holds every variable set true.
    Fixed { added: PrioritySet, model: PrioritySet },
    NoFix(Guidance),
}

/// Core-derived hints for the search.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Guidance {
    /// Priority variables to try first, in order.
    pub preferred: Vec<Priority>,
    /// Chosen interactions of the cubes in the core; refinement targets.
    pub interactions: BTreeSet<Interaction>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FixError {
    #[error("satisfying assignment fails re-validation: {0}")]
    Invalid(String),
}

/// Statistics of one resolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FixStats {
    pub sat_calls: usize,
}

struct Encoded {
    solver: Solver,
    vars: BTreeMap<Priority, Var>,
    selectors: Vec<(Lit, Group)>,
}

fn encode(f: &FixFormula) -> Encoded {
    let mut solver = Solver::new();
    let mut vars = BTreeMap::new();
    for c in &f.clauses {
        for &(p, _) in &c.lits {
            vars.entry(p).or_insert_with(|| solver.new_var());
        }
    }
    let mut groups: BTreeMap<Group, Lit> = BTreeMap::new();
    for c in &f.clauses {
        let sel = *groups.entry(c.group).or_insert_with(|| Lit::pos(solver.new_var()));
        let mut lits: Vec<Lit> = c.lits.iter().map(|&(p, pol)| Lit::new(vars[&p], pol)).collect();
        lits.push(!sel);
        solver.add_clause(&lits);
    }
    let selectors = groups.into_iter().map(|(g, l)| (l, g)).collect();
    Encoded { solver, vars, selectors }
}

/// Resolves the formula. With `minimal`, the number of true candidate
/// variables is bounded from 0 upwards until satisfiable.
pub fn resolve_fix(f: &FixFormula, vis: &VisibilityMatrix, minimal: bool, stats: &mut FixStats) -> Result<FixOutcome, FixError> {
    let mut enc = encode(f);
    let assumptions: Vec<Lit> = enc.selectors.iter().map(|&(l, _)| l).collect();
    let cand: Vec<Var> = f.candidates.iter().map(|p| enc.vars[p]).collect();
    let outcome = if minimal && !cand.is_empty() {
        let bound = at_most_counter(&mut enc.solver, &cand);
        let mut result = None;
        for k in 0..=cand.len() {
            let mut a = assumptions.clone();
            if k < cand.len() {
                a.push(!bound[k]);
            }
            stats.sat_calls += 1;
            let r = enc.solver.solve(&a);
            if r.is_sat() || k == cand.len() {
                result = Some(r);
                break;
            }
        }
        result.expect("loop runs at least once")
    } else {
        stats.sat_calls += 1;
        enc.solver.solve(&assumptions)
    };
    match outcome {
        SatOutcome::Sat(model) => {
            let truth: PrioritySet = enc.vars.iter().filter(|(_, v)| model[v.0 as usize]).map(|(&p, _)| p).collect();
            let added: PrioritySet =
                f.candidates.iter().copied().filter(|p| truth.contains(p) && !f.existing.contains(p)).collect();
            let all = f.existing.union(&added).transitive_closure();
            if !all.is_irreflexive() {
                return Err(FixError::Invalid("cyclic".into()));
            }
            if let Some(p) = all.iter().find(|&p| !vis.allows(p)) {
                return Err(FixError::Invalid(format!("{p:?} violates the architecture")));
            }
            Ok(FixOutcome::Fixed { added, model: truth })
        }
        SatOutcome::Unsat(core) => {
            stats.sat_calls += 1;
            let core = enc.solver.minimize_core(&core);
            Ok(FixOutcome::NoFix(guidance(f, &enc, &core)))
        }
    }
}

fn guidance(f: &FixFormula, enc: &Encoded, core: &[Lit]) -> Guidance {
    let groups: BTreeSet<Group> = enc.selectors.iter().filter(|(l, _)| core.contains(l)).map(|&(_, g)| g).collect();
    let mut mentioned = BTreeSet::new();
    let mut interactions = BTreeSet::new();
    for c in f.clauses.iter().filter(|c| groups.contains(&c.group)) {
        if let Group::Cube(k) = c.group {
            interactions.insert(f.cubes[k].0);
        }
        mentioned.extend(c.lits.iter().map(|&(p, _)| p).filter(|p| f.candidates.contains(p)));
    }
    let mut preferred = Vec::new();
    for &p in &mentioned {
        if mentioned.contains(&p.reversed()) && (p.low, p.high) < (p.high, p.low) {
            preferred.push(p);
        }
    }
    for &p in &mentioned {
        if !preferred.contains(&p) && !preferred.contains(&p.reversed()) {
            preferred.push(p);
        }
    }
    for &p in &mentioned {
        if !preferred.contains(&p) {
            preferred.push(p);
        }
    }
    Guidance { preferred, interactions }
}

/// Sequential counter over `xs`. Returns literals `r[k]` with
/// `r[k] ⇐ (at least k+1 of xs are true)`; assuming `¬r[k]` bounds the
/// count by `k`.
fn at_most_counter(s: &mut Solver, xs: &[Var]) -> Vec<Lit> {
    let n = xs.len();
    let mut prev: Vec<Lit> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let width = (i + 1).min(n);
        let cur: Vec<Lit> = (0..width).map(|_| Lit::pos(s.new_var())).collect();
        s.add_clause(&[Lit::neg(x), cur[0]]);
        for j in 0..prev.len() {
            s.add_clause(&[!prev[j], cur[j]]);
            if j + 1 < width {
                s.add_clause(&[Lit::neg(x), !prev[j], cur[j + 1]]);
            }
        }
        prev = cur;
    }
    prev
}
