//! A small conflict-driven clause-learning SAT solver.
//!
//! Branching is fixed: the lowest-index unassigned variable, `false`
//! first. Assumptions are decided before anything else and unsatisfiable
//! runs report the subset of assumptions involved in the final conflict.

use std::fmt::{self, Write as _};
use std::ops::Not;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

/// Literal encoded as `2 * var + negated`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(v: Var, positive: bool) -> Lit {
        Lit(v.0 * 2 + u32::from(!positive))
    }

    pub fn pos(v: Var) -> Lit {
        Lit::new(v, true)
    }

    pub fn neg(v: Var) -> Lit {
        Lit::new(v, false)
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// DIMACS form: 1-based, negative when negated.
    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var().0) + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatOutcome {
    /// Total assignment indexed by variable.
    Sat(Vec<bool>),
    /// Assumptions that are jointly inconsistent with the clauses.
    Unsat(Vec<Lit>),
}

impl SatOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatOutcome::Sat(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SatStats {
    pub solves: u64,
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Value {
    Unassigned,
    True,
    False,
}

#[derive(Clone, Default)]
pub struct Solver {
    /// Clauses as given, for export.
    original: Vec<Vec<Lit>>,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<Option<bool>>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    seen: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    inconsistent: bool,
    stats: SatStats,
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.original.len()
    }

    pub fn stats(&self) -> &SatStats {
        &self.stats
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.assigns.len() as u32);
        self.assigns.push(None);
        self.level.push(0);
        self.reason.push(None);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        v
    }

    fn ensure_var(&mut self, v: Var) {
        while self.num_vars() <= v.0 as usize {
            self.new_var();
        }
    }

    fn value(&self, l: Lit) -> Value {
        match self.assigns[l.var().0 as usize] {
            None => Value::Unassigned,
            Some(b) if b == l.is_positive() => Value::True,
            Some(_) => Value::False,
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause; returns `false` once the clause set is known to be
    /// unsatisfiable. An empty clause makes every later solve fail with an
    /// empty core.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        for l in lits {
            self.ensure_var(l.var());
        }
        self.original.push(lits.to_vec());
        if self.inconsistent {
            return false;
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) || c.iter().any(|&l| self.value(l) == Value::True) {
            return true;
        }
        c.retain(|&l| self.value(l) != Value::False);
        match c.len() {
            0 => {
                self.inconsistent = true;
                false
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.inconsistent = true;
                }
                !self.inconsistent
            }
            _ => {
                self.attach(c);
                true
            }
        }
    }

    fn attach(&mut self, c: Vec<Lit>) -> usize {
        let idx = self.clauses.len();
        self.watches[(!c[0]).index()].push(idx);
        self.watches[(!c[1]).index()].push(idx);
        self.clauses.push(c);
        idx
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var().0 as usize;
        self.assigns[v] = Some(l.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns a conflicting clause.
    ///
    /// `watches[l]` lists the clauses watching `¬l`, visited when `l`
    /// becomes true.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.index()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                if self.clauses[ci][0] == false_lit {
                    self.clauses[ci].swap(0, 1);
                }
                let first = self.clauses[ci][0];
                if self.value(first) == Value::True {
                    ws[j] = ci;
                    j += 1;
                    continue;
                }
                let len = self.clauses[ci].len();
                let replacement = (2..len).find(|&k| self.value(self.clauses[ci][k]) != Value::False);
                if let Some(k) = replacement {
                    self.clauses[ci].swap(1, k);
                    let w = !self.clauses[ci][1];
                    self.watches[w.index()].push(ci);
                    continue;
                }
                ws[j] = ci;
                j += 1;
                if self.value(first) == Value::False {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, Some(ci));
                }
            }
            ws.truncate(j);
            // Watches added for `p` while iterating (none expected) are kept.
            ws.append(&mut self.watches[p.index()]);
            self.watches[p.index()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let start = self.trail_lim[level];
        for l in self.trail.drain(start..) {
            let v = l.var().0 as usize;
            self.assigns[v] = None;
            self.reason[v] = None;
        }
        self.trail_lim.truncate(level);
        self.qhead = self.trail.len();
    }

    /// First-UIP learning; returns the learnt clause (asserting literal
    /// first) and the backjump level.
    fn analyze(&mut self, conflict: usize) -> (Vec<Lit>, usize) {
        let dl = self.decision_level();
        let mut learnt = vec![Lit(0)];
        let mut pending = 0usize;
        let mut clause = conflict;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        loop {
            for k in 0..self.clauses[clause].len() {
                let q = self.clauses[clause][k];
                if Some(q) == p {
                    continue;
                }
                let v = q.var().0 as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    if self.level[v] == dl {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var().0 as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            self.seen[lit.var().0 as usize] = false;
            p = Some(lit);
            pending -= 1;
            if pending == 0 {
                break;
            }
            clause = self.reason[lit.var().0 as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict at a decision level");
        for l in &learnt[1..] {
            self.seen[l.var().0 as usize] = false;
        }
        let mut back = 0;
        if learnt.len() > 1 {
            let (k, lvl) = learnt[1..]
                .iter()
                .enumerate()
                .map(|(k, l)| (k + 1, self.level[l.var().0 as usize]))
                .max_by_key(|&(k, lvl)| (lvl, std::cmp::Reverse(k)))
                .unwrap();
            learnt.swap(1, k);
            back = lvl;
        }
        (learnt, back)
    }

    /// Assumptions responsible for `failed` being false.
    fn analyze_final(&mut self, failed: Lit) -> Vec<Lit> {
        let mut core = vec![failed];
        let fv = failed.var().0 as usize;
        if self.level[fv] == 0 {
            return core;
        }
        self.seen[fv] = true;
        let start = self.trail_lim[0];
        for i in (start..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().0 as usize;
            if !self.seen[v] {
                continue;
            }
            match self.reason[v] {
                None => core.push(l),
                Some(c) => {
                    for k in 0..self.clauses[c].len() {
                        let q = self.clauses[c][k];
                        let qv = q.var().0 as usize;
                        if qv != v && self.level[qv] > 0 {
                            self.seen[qv] = true;
                        }
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[fv] = false;
        core
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> SatOutcome {
        self.stats.solves += 1;
        for l in assumptions {
            self.ensure_var(l.var());
        }
        if self.inconsistent {
            return SatOutcome::Unsat(Vec::new());
        }
        let outcome = self.search(assumptions);
        self.cancel_until(0);
        outcome
    }

    fn search(&mut self, assumptions: &[Lit]) -> SatOutcome {
        loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    self.inconsistent = true;
                    return SatOutcome::Unsat(Vec::new());
                }
                let (learnt, back) = self.analyze(conflict);
                self.cancel_until(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let idx = self.attach(learnt);
                    self.enqueue(first, Some(idx));
                }
                continue;
            }
            let mut next = None;
            while self.decision_level() < assumptions.len() {
                let a = assumptions[self.decision_level()];
                match self.value(a) {
                    Value::True => self.trail_lim.push(self.trail.len()),
                    Value::False => return SatOutcome::Unsat(self.analyze_final(a)),
                    Value::Unassigned => {
                        next = Some(a);
                        break;
                    }
                }
            }
            if next.is_none() {
                match self.assigns.iter().position(Option::is_none) {
                    None => return SatOutcome::Sat(self.assigns.iter().map(|a| a.unwrap()).collect()),
                    Some(v) => {
                        self.stats.decisions += 1;
                        next = Some(Lit::neg(Var(v as u32)));
                    }
                }
            }
            self.trail_lim.push(self.trail.len());
            self.enqueue(next.unwrap(), None);
        }
    }

    /// Deletion-minimal unsatisfiable subset of `core`.
    pub fn minimize_core(&mut self, core: &[Lit]) -> Vec<Lit> {
        let mut current = core.to_vec();
        let mut i = 0;
        while i < current.len() {
            let mut trial = current.clone();
            trial.remove(i);
            match self.solve(&trial) {
                SatOutcome::Unsat(smaller) => {
                    trial.retain(|l| smaller.contains(l));
                    current = trial;
                }
                SatOutcome::Sat(_) => i += 1,
            }
        }
        current
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars(), self.original.len());
        for c in &self.original {
            for l in c {
                let _ = write!(out, "{} ", l.to_dimacs());
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn from_dimacs(text: &str) -> Result<Solver, DimacsError> {
        let mut solver = Solver::new();
        let mut clause = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(header) = line.strip_prefix('p') {
                let parts: Vec<&str> = header.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "cnf" {
                    return Err(DimacsError::Parse(n + 1, "malformed header".into()));
                }
                let vars: u32 = parts[1].parse().map_err(|_| DimacsError::Parse(n + 1, "bad variable count".into()))?;
                if vars > 0 {
                    solver.ensure_var(Var(vars - 1));
                }
                continue;
            }
            for tok in line.split_whitespace() {
                let x: i64 = tok.parse().map_err(|_| DimacsError::Parse(n + 1, format!("bad literal `{tok}`")))?;
                if x == 0 {
                    solver.add_clause(&clause);
                    clause.clear();
                } else {
                    let v = Var((x.unsigned_abs() - 1) as u32);
                    clause.push(Lit::new(v, x > 0));
                }
            }
        }
        if !clause.is_empty() {
            solver.add_clause(&clause);
        }
        Ok(solver)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lit(x: i64) -> Lit {
        Lit::new(Var((x.unsigned_abs() - 1) as u32), x > 0)
    }

    #[test]
    fn contradiction() {
        let mut s = Solver::new();
        s.add_clause(&[lit(1)]);
        s.add_clause(&[lit(-1)]);
        assert_eq!(s.solve(&[]), SatOutcome::Unsat(vec![]));
    }

    #[test]
    fn assumption_forces_other_literal() {
        let mut s = Solver::new();
        s.add_clause(&[lit(1), lit(2)]);
        match s.solve(&[lit(-1)]) {
            SatOutcome::Sat(m) => assert!(!m[0] && m[1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_clause() {
        let mut s = Solver::new();
        assert!(!s.add_clause(&[]));
        assert_eq!(s.solve(&[lit(1)]), SatOutcome::Unsat(vec![]));
    }

    #[test]
    fn core_minimization() {
        let mut s = Solver::new();
        s.new_var();
        s.new_var();
        let core = match s.solve(&[lit(1), lit(-1), lit(2)]) {
            SatOutcome::Unsat(c) => c,
            other => panic!("{other:?}"),
        };
        let min = s.minimize_core(&core);
        let mut sorted = min.clone();
        sorted.sort();
        assert_eq!(sorted, vec![lit(1), lit(-1)]);
        assert_eq!(s.minimize_core(&[lit(1), lit(-1)]).len(), 2);
    }

    #[test]
    fn singleton_core() {
        let mut s = Solver::new();
        s.add_clause(&[lit(-1)]);
        assert_eq!(s.solve(&[lit(1)]), SatOutcome::Unsat(vec![lit(1)]));
        assert_eq!(s.minimize_core(&[lit(1)]), vec![lit(1)]);
    }

    #[test]
    fn dimacs_round_trip() {
        let mut s = Solver::new();
        s.add_clause(&[lit(1), lit(-2)]);
        s.add_clause(&[lit(2), lit(3)]);
        let text = s.to_dimacs();
        assert!(text.starts_with("p cnf 3 2"));
        let t = Solver::from_dimacs(&text).unwrap();
        assert_eq!(t.to_dimacs(), text);
        assert!(Solver::from_dimacs("p dnf 1 1\n").is_err());
    }

    #[test]
    fn pigeonhole_is_unsat() {
        // Four pigeons, three holes.
        let mut s = Solver::new();
        let x = |p: i64, h: i64| p * 3 + h + 1;
        for p in 0..4 {
            s.add_clause(&[lit(x(p, 0)), lit(x(p, 1)), lit(x(p, 2))]);
        }
        for h in 0..3 {
            for p in 0..4 {
                for q in p + 1..4 {
                    s.add_clause(&[lit(-x(p, h)), lit(-x(q, h))]);
                }
            }
        }
        assert_eq!(s.solve(&[]), SatOutcome::Unsat(vec![]));
    }

    fn satisfies(clauses: &[Vec<i64>], a: u32) -> bool {
        clauses.iter().all(|c| c.iter().any(|&x| ((a >> (x.unsigned_abs() - 1)) & 1 == 1) == (x > 0)))
    }

    fn cnf(vars: i64, max_clauses: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
        let lit = (1..=vars, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v });
        prop::collection::vec(prop::collection::vec(lit, 3), 1..max_clauses)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn agrees_with_enumeration(n in 3i64..=14, clauses in cnf(14, 70), assume in prop::collection::vec((1i64..=14, any::<bool>()), 0..4)) {
            let clauses: Vec<Vec<i64>> = clauses.into_iter().map(|c| c.into_iter().map(|x| x.signum() * ((x.abs() - 1) % n + 1)).collect()).collect();
            let assume: Vec<i64> = assume.into_iter().map(|(v, s)| { let v = (v - 1) % n + 1; if s { v } else { -v } }).collect();
            let mut s = Solver::new();
            for _ in 0..n { s.new_var(); }
            for c in &clauses {
                s.add_clause(&c.iter().map(|&x| lit(x)).collect::<Vec<_>>());
            }
            let with_assume: Vec<Vec<i64>> = clauses.iter().cloned().chain(assume.iter().map(|&x| vec![x])).collect();
            let expected = (0..1u32 << n).any(|a| satisfies(&with_assume, a));
            let lits: Vec<Lit> = assume.iter().map(|&x| lit(x)).collect();
            match s.solve(&lits) {
                SatOutcome::Sat(m) => {
                    prop_assert!(expected);
                    let a = m.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << i));
                    prop_assert!(satisfies(&with_assume, a));
                }
                SatOutcome::Unsat(core) => {
                    prop_assert!(!expected);
                    prop_assert!(core.iter().all(|l| lits.contains(l)));
                    let core_cnf: Vec<Vec<i64>> = clauses.iter().cloned().chain(core.iter().map(|l| vec![l.to_dimacs()])).collect();
                    prop_assert!(!(0..1u32 << n).any(|a| satisfies(&core_cnf, a)));
                    let min = s.minimize_core(&core);
                    prop_assert!(!s.solve(&min).is_sat());
                    for k in 0..min.len() {
                        let mut fewer = min.clone();
                        fewer.remove(k);
                        prop_assert!(s.solve(&fewer).is_sat());
                    }
                }
            }
            // Clause-only status stays consistent after solving with assumptions.
            let plain = (0..1u32 << n).any(|a| satisfies(&clauses, a));
            prop_assert_eq!(s.solve(&[]).is_sat(), plain);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_3cnf_twenty_vars(clauses in cnf(20, 95)) {
            let mut s = Solver::new();
            for _ in 0..20 { s.new_var(); }
            for c in &clauses {
                s.add_clause(&c.iter().map(|&x| lit(x)).collect::<Vec<_>>());
            }
            let expected = (0..1u32 << 20).any(|a| satisfies(&clauses, a));
            match s.solve(&[]) {
                SatOutcome::Sat(m) => {
                    let a = m.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << i));
                    prop_assert!(satisfies(&clauses, a));
                    prop_assert!(expected);
                }
                SatOutcome::Unsat(_) => prop_assert!(!expected),
            }
        }
    }
}
