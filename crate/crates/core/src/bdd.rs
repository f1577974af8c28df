//! Reduced ordered binary decision diagrams.
//!
//! Variables are plain indices; a smaller index sits closer to the root.
//! Nodes are hash-consed, so two handles are equal iff they denote the
//! same Boolean function. There is no reference counting: callers that
//! build many intermediate diagrams call [`BddManager::collect`] with the
//! handles they still need.

use std::fmt::Write as _;

use rustc_hash::FxHashMap;
use thiserror::Error;

/// Default node capacity.
pub const DEFAULT_CAPACITY: usize = 1 << 24;

const CACHE_LIMIT: usize = 1 << 22;
const TERMINAL: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("decision diagram node capacity of {0} exceeded")]
    Capacity(usize),
    #[error("substitution lists differ in length ({0} vs {1})")]
    SubstitutionLength(usize, usize),
    #[error("variable {0} is listed twice in a substitution")]
    SubstitutionDuplicate(u32),
    #[error("variable {0} occurs in both substitution lists at different positions")]
    SubstitutionOverlap(u32),
    #[error("no satisfying cube: the set is empty")]
    Empty,
}

/// Handle to a canonical diagram node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bdd(u32);

impl Bdd {
    pub const FALSE: Bdd = Bdd(0);
    pub const TRUE: Bdd = Bdd(1);

    pub fn is_false(self) -> bool {
        self.0 == 0
    }

    pub fn is_true(self) -> bool {
        self.0 == 1
    }

    pub fn is_const(self) -> bool {
        self.0 < 2
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    var: u32,
    lo: u32,
    hi: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
    Xor,
    Diff,
    Not,
    Exists,
    Ite,
    AndExists,
}

/// A literal `(variable, polarity)`.
pub type Literal = (u32, bool);

pub struct BddManager {
    nodes: Vec<Node>,
    unique: FxHashMap<(u32, u32, u32), u32>,
    cache2: FxHashMap<(Op, u32, u32), u32>,
    cache3: FxHashMap<(Op, u32, u32, u32), u32>,
    num_vars: u32,
    capacity: usize,
    exhausted: bool,
}

impl BddManager {
    pub fn new(num_vars: u32) -> Self {
        Self::with_capacity(num_vars, DEFAULT_CAPACITY)
    }

    pub fn with_capacity(num_vars: u32, capacity: usize) -> Self {
        let terminal = |v| Node { var: TERMINAL, lo: v, hi: v };
        BddManager {
            nodes: vec![terminal(0), terminal(1)],
            unique: FxHashMap::default(),
            cache2: FxHashMap::default(),
            cache3: FxHashMap::default(),
            num_vars,
            capacity: capacity.max(2),
            exhausted: false,
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Number of live nodes, terminals included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 2
    }

    /// Fails once an operation ran out of nodes; results computed after
    /// that point are meaningless.
    pub fn status(&self) -> Result<(), BddError> {
        if self.exhausted {
            Err(BddError::Capacity(self.capacity))
        } else {
            Ok(())
        }
    }

    pub fn constant(&self, value: bool) -> Bdd {
        if value {
            Bdd::TRUE
        } else {
            Bdd::FALSE
        }
    }

    pub fn var(&mut self, v: u32) -> Bdd {
        assert!(v < self.num_vars, "variable {v} not allocated");
        Bdd(self.mk(v, 0, 1))
    }

    pub fn nvar(&mut self, v: u32) -> Bdd {
        assert!(v < self.num_vars, "variable {v} not allocated");
        Bdd(self.mk(v, 1, 0))
    }

    pub fn literal(&mut self, (v, value): Literal) -> Bdd {
        if value {
            self.var(v)
        } else {
            self.nvar(v)
        }
    }

    /// Conjunction of literals.
    pub fn cube(&mut self, literals: &[Literal]) -> Bdd {
        let mut lits = literals.to_vec();
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0].0 == w[1].0) {
            return Bdd::FALSE;
        }
        let mut acc = 1;
        for &(v, value) in lits.iter().rev() {
            acc = if value { self.mk(v, 0, acc) } else { self.mk(v, acc, 0) };
        }
        Bdd(acc)
    }

    /// Positive cube over `vars`, as used by the quantifiers.
    pub fn var_set(&mut self, vars: &[u32]) -> Bdd {
        let lits: Vec<Literal> = vars.iter().map(|&v| (v, true)).collect();
        self.cube(&lits)
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        if let Some(&n) = self.unique.get(&(var, lo, hi)) {
            return n;
        }
        if self.nodes.len() >= self.capacity {
            self.exhausted = true;
            return 0;
        }
        let n = self.nodes.len() as u32;
        self.nodes.push(Node { var, lo, hi });
        self.unique.insert((var, lo, hi), n);
        n
    }

    fn top(&self, f: u32) -> u32 {
        self.nodes[f as usize].var
    }

    /// Cofactors of `f` with respect to `var`, which must not lie below
    /// the top variable of `f`.
    fn cofactors(&self, f: u32, var: u32) -> (u32, u32) {
        let n = self.nodes[f as usize];
        if n.var == var {
            (n.lo, n.hi)
        } else {
            (f, f)
        }
    }

    fn cache2_insert(&mut self, key: (Op, u32, u32), value: u32) {
        if self.cache2.len() >= CACHE_LIMIT {
            self.cache2.clear();
        }
        self.cache2.insert(key, value);
    }

    fn cache3_insert(&mut self, key: (Op, u32, u32, u32), value: u32) {
        if self.cache3.len() >= CACHE_LIMIT {
            self.cache3.clear();
        }
        self.cache3.insert(key, value);
    }

    pub fn not(&mut self, f: Bdd) -> Bdd {
        Bdd(self.not_rec(f.0))
    }

    fn not_rec(&mut self, f: u32) -> u32 {
        if f < 2 {
            return 1 - f;
        }
        if let Some(&r) = self.cache2.get(&(Op::Not, f, 0)) {
            return r;
        }
        let Node { var, lo, hi } = self.nodes[f as usize];
        let l = self.not_rec(lo);
        let h = self.not_rec(hi);
        let r = self.mk(var, l, h);
        self.cache2_insert((Op::Not, f, 0), r);
        r
    }

    pub fn and(&mut self, f: Bdd, g: Bdd) -> Bdd {
        Bdd(self.apply(Op::And, f.0, g.0))
    }

    pub fn or(&mut self, f: Bdd, g: Bdd) -> Bdd {
        Bdd(self.apply(Op::Or, f.0, g.0))
    }

    pub fn xor(&mut self, f: Bdd, g: Bdd) -> Bdd {
        Bdd(self.apply(Op::Xor, f.0, g.0))
    }

    /// `f ∧ ¬g`.
    pub fn diff(&mut self, f: Bdd, g: Bdd) -> Bdd {
        Bdd(self.apply(Op::Diff, f.0, g.0))
    }

    pub fn iff(&mut self, f: Bdd, g: Bdd) -> Bdd {
        let x = self.xor(f, g);
        self.not(x)
    }

    pub fn implies(&mut self, f: Bdd, g: Bdd) -> Bdd {
        let d = self.diff(f, g);
        self.not(d)
    }

    pub fn and_all(&mut self, fs: impl IntoIterator<Item = Bdd>) -> Bdd {
        let mut acc = Bdd::TRUE;
        for f in fs {
            acc = self.and(acc, f);
            if acc.is_false() {
                break;
            }
        }
        acc
    }

    pub fn or_all(&mut self, fs: impl IntoIterator<Item = Bdd>) -> Bdd {
        let mut acc = Bdd::FALSE;
        for f in fs {
            acc = self.or(acc, f);
            if acc.is_true() {
                break;
            }
        }
        acc
    }

    fn apply(&mut self, op: Op, mut f: u32, mut g: u32) -> u32 {
        match op {
            Op::And => {
                if f == 0 || g == 0 {
                    return 0;
                }
                if f == 1 || f == g {
                    return g;
                }
                if g == 1 {
                    return f;
                }
            }
            Op::Or => {
                if f == 1 || g == 1 {
                    return 1;
                }
                if f == 0 || f == g {
                    return g;
                }
                if g == 0 {
                    return f;
                }
            }
            Op::Xor => {
                if f == g {
                    return 0;
                }
                if f == 0 {
                    return g;
                }
                if g == 0 {
                    return f;
                }
                if f == 1 {
                    return self.not_rec(g);
                }
                if g == 1 {
                    return self.not_rec(f);
                }
            }
            Op::Diff => {
                if f == 0 || g == 1 || f == g {
                    return 0;
                }
                if g == 0 {
                    return f;
                }
                if f == 1 {
                    return self.not_rec(g);
                }
            }
            _ => unreachable!("not a binary operator"),
        }
        if op != Op::Diff && f > g {
            std::mem::swap(&mut f, &mut g);
        }
        if let Some(&r) = self.cache2.get(&(op, f, g)) {
            return r;
        }
        let var = self.top(f).min(self.top(g));
        let (f0, f1) = self.cofactors(f, var);
        let (g0, g1) = self.cofactors(g, var);
        let l = self.apply(op, f0, g0);
        let h = self.apply(op, f1, g1);
        let r = self.mk(var, l, h);
        self.cache2_insert((op, f, g), r);
        r
    }

    pub fn ite(&mut self, f: Bdd, g: Bdd, h: Bdd) -> Bdd {
        Bdd(self.ite_rec(f.0, g.0, h.0))
    }

    fn ite_rec(&mut self, f: u32, g: u32, h: u32) -> u32 {
        if f == 1 {
            return g;
        }
        if f == 0 {
            return h;
        }
        if g == h {
            return g;
        }
        if g == 1 && h == 0 {
            return f;
        }
        if g == 0 && h == 1 {
            return self.not_rec(f);
        }
        if g == 1 {
            return self.apply(Op::Or, f, h);
        }
        if h == 0 {
            return self.apply(Op::And, f, g);
        }
        if let Some(&r) = self.cache3.get(&(Op::Ite, f, g, h)) {
            return r;
        }
        let var = self.top(f).min(self.top(g)).min(self.top(h));
        let (f0, f1) = self.cofactors(f, var);
        let (g0, g1) = self.cofactors(g, var);
        let (h0, h1) = self.cofactors(h, var);
        let l = self.ite_rec(f0, g0, h0);
        let hi = self.ite_rec(f1, g1, h1);
        let r = self.mk(var, l, hi);
        self.cache3_insert((Op::Ite, f, g, h), r);
        r
    }

    /// `∃ vars. f`, with `vars` given as a positive cube (see [`BddManager::var_set`]).
    pub fn exists(&mut self, f: Bdd, vars: Bdd) -> Bdd {
        Bdd(self.exists_rec(f.0, vars.0))
    }

    fn exists_rec(&mut self, f: u32, mut cube: u32) -> u32 {
        if f < 2 {
            return f;
        }
        let var = self.top(f);
        while cube >= 2 && self.top(cube) < var {
            cube = self.nodes[cube as usize].hi;
        }
        if cube < 2 {
            return f;
        }
        if let Some(&r) = self.cache2.get(&(Op::Exists, f, cube)) {
            return r;
        }
        let Node { lo, hi, .. } = self.nodes[f as usize];
        let r = if self.top(cube) == var {
            let rest = self.nodes[cube as usize].hi;
            let l = self.exists_rec(lo, rest);
            if l == 1 {
                1
            } else {
                let h = self.exists_rec(hi, rest);
                self.apply(Op::Or, l, h)
            }
        } else {
            let l = self.exists_rec(lo, cube);
            let h = self.exists_rec(hi, cube);
            self.mk(var, l, h)
        };
        self.cache2_insert((Op::Exists, f, cube), r);
        r
    }

    /// `∀ vars. f`.
    pub fn forall(&mut self, f: Bdd, vars: Bdd) -> Bdd {
        let n = self.not(f);
        let e = self.exists(n, vars);
        self.not(e)
    }

    /// `∃ vars. f ∧ g` without building the conjunction.
    pub fn and_exists(&mut self, f: Bdd, g: Bdd, vars: Bdd) -> Bdd {
        Bdd(self.and_exists_rec(f.0, g.0, vars.0))
    }

    fn and_exists_rec(&mut self, mut f: u32, mut g: u32, mut cube: u32) -> u32 {
        if f == 0 || g == 0 {
            return 0;
        }
        if f == 1 && g == 1 {
            return 1;
        }
        if cube < 2 {
            return self.apply(Op::And, f, g);
        }
        if f == 1 || f == g {
            return self.exists_rec(g, cube);
        }
        if g == 1 {
            return self.exists_rec(f, cube);
        }
        if f > g {
            std::mem::swap(&mut f, &mut g);
        }
        let var = self.top(f).min(self.top(g));
        while cube >= 2 && self.top(cube) < var {
            cube = self.nodes[cube as usize].hi;
        }
        if cube < 2 {
            return self.apply(Op::And, f, g);
        }
        if let Some(&r) = self.cache3.get(&(Op::AndExists, f, g, cube)) {
            return r;
        }
        let (f0, f1) = self.cofactors(f, var);
        let (g0, g1) = self.cofactors(g, var);
        let r = if self.top(cube) == var {
            let rest = self.nodes[cube as usize].hi;
            let l = self.and_exists_rec(f0, g0, rest);
            if l == 1 {
                1
            } else {
                let h = self.and_exists_rec(f1, g1, rest);
                self.apply(Op::Or, l, h)
            }
        } else {
            let l = self.and_exists_rec(f0, g0, cube);
            let h = self.and_exists_rec(f1, g1, cube);
            self.mk(var, l, h)
        };
        self.cache3_insert((Op::AndExists, f, g, cube), r);
        r
    }

    /// Simultaneous renaming `from[k] ↦ to[k]`.
    pub fn substitute(&mut self, f: Bdd, from: &[u32], to: &[u32]) -> Result<Bdd, BddError> {
        if from.len() != to.len() {
            return Err(BddError::SubstitutionLength(from.len(), to.len()));
        }
        let mut map: Vec<u32> = (0..self.num_vars).collect();
        let mut seen_from = vec![false; self.num_vars as usize];
        let mut seen_to = vec![false; self.num_vars as usize];
        let mut pos_from = vec![usize::MAX; self.num_vars as usize];
        for (k, (&a, &b)) in from.iter().zip(to).enumerate() {
            assert!(a < self.num_vars && b < self.num_vars, "variable not allocated");
            if std::mem::replace(&mut seen_from[a as usize], true) {
                return Err(BddError::SubstitutionDuplicate(a));
            }
            if std::mem::replace(&mut seen_to[b as usize], true) {
                return Err(BddError::SubstitutionDuplicate(b));
            }
            pos_from[a as usize] = k;
            map[a as usize] = b;
        }
        for (k, &b) in to.iter().enumerate() {
            let p = pos_from[b as usize];
            if p != usize::MAX && p != k {
                return Err(BddError::SubstitutionOverlap(b));
            }
        }
        let support = self.support(f);
        let mapped: Vec<u32> = support.iter().map(|&v| map[v as usize]).collect();
        let monotone = mapped.windows(2).all(|w| w[0] < w[1]);
        let mut memo = FxHashMap::default();
        Ok(Bdd(self.rename_rec(f.0, &map, monotone, &mut memo)))
    }

    fn rename_rec(&mut self, f: u32, map: &[u32], monotone: bool, memo: &mut FxHashMap<u32, u32>) -> u32 {
        if f < 2 {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let Node { var, lo, hi } = self.nodes[f as usize];
        let l = self.rename_rec(lo, map, monotone, memo);
        let h = self.rename_rec(hi, map, monotone, memo);
        let v = map[var as usize];
        let r = if monotone {
            self.mk(v, l, h)
        } else {
            let x = self.mk(v, 0, 1);
            self.ite_rec(x, h, l)
        };
        memo.insert(f, r);
        r
    }

    /// Cofactor of `f` with `var` fixed to `value`.
    pub fn restrict(&mut self, f: Bdd, var: u32, value: bool) -> Bdd {
        let mut memo = FxHashMap::default();
        Bdd(self.restrict_rec(f.0, var, value, &mut memo))
    }

    fn restrict_rec(&mut self, f: u32, var: u32, value: bool, memo: &mut FxHashMap<u32, u32>) -> u32 {
        let n = self.nodes[f as usize];
        if f < 2 || n.var > var {
            return f;
        }
        if n.var == var {
            return if value { n.hi } else { n.lo };
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let l = self.restrict_rec(n.lo, var, value, memo);
        let h = self.restrict_rec(n.hi, var, value, memo);
        let r = self.mk(n.var, l, h);
        memo.insert(f, r);
        r
    }

    pub fn eval(&self, f: Bdd, assignment: impl Fn(u32) -> bool) -> bool {
        let mut n = f.0;
        while n >= 2 {
            let node = self.nodes[n as usize];
            n = if assignment(node.var) { node.hi } else { node.lo };
        }
        n == 1
    }

    /// Variables `f` depends on, ascending.
    pub fn support(&self, f: Bdd) -> Vec<u32> {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut vars = vec![false; self.num_vars as usize];
        let mut stack = vec![f.0];
        while let Some(n) = stack.pop() {
            if n < 2 || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            vars[node.var as usize] = true;
            stack.push(node.lo);
            stack.push(node.hi);
        }
        (0..self.num_vars).filter(|&v| vars[v as usize]).collect()
    }

    /// Number of internal nodes reachable from `f`.
    pub fn node_count(&self, f: Bdd) -> usize {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut stack = vec![f.0];
        while let Some(n) = stack.pop() {
            if n >= 2 && seen.insert(n) {
                let node = self.nodes[n as usize];
                stack.push(node.lo);
                stack.push(node.hi);
            }
        }
        seen.len()
    }

    /// Number of satisfying assignments over the variables in `vars`,
    /// which must include the support of `f`.
    pub fn sat_count(&self, f: Bdd, vars: &[u32]) -> f64 {
        let mut sorted = vars.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let rank = |v: u32| sorted.binary_search(&v).expect("support outside the counted variables");
        let mut memo: FxHashMap<u32, f64> = FxHashMap::default();
        fn rec(m: &BddManager, f: u32, rank: &dyn Fn(u32) -> usize, total: usize, memo: &mut FxHashMap<u32, f64>) -> (f64, usize) {
            // Returns the count over the variables from the node's level down.
            if f < 2 {
                return (f as f64, total);
            }
            let node = m.nodes[f as usize];
            let level = rank(node.var);
            if let Some(&c) = memo.get(&f) {
                return (c, level);
            }
            let (cl, ll) = rec(m, node.lo, rank, total, memo);
            let (ch, lh) = rec(m, node.hi, rank, total, memo);
            let c = cl * 2f64.powi((ll - level - 1) as i32) + ch * 2f64.powi((lh - level - 1) as i32);
            memo.insert(f, c);
            (c, level)
        }
        let (c, level) = rec(self, f.0, &rank, sorted.len(), &mut memo);
        c * 2f64.powi(level as i32)
    }

    /// Disjoint path cubes of `f`, low branch first.
    pub fn cubes(&self, f: Bdd) -> Cubes<'_> {
        Cubes { mgr: self, stack: vec![(f.0, 0, None)], path: Vec::new() }
    }

    pub fn pick_cube(&self, f: Bdd) -> Result<Vec<Literal>, BddError> {
        self.cubes(f).next().ok_or(BddError::Empty)
    }

    /// Full assignments to `vars` (ascending) satisfying `f`, whose
    /// support must lie within `vars`. Enumerated in lexicographic order
    /// with `false < true`.
    pub fn minterms(&self, f: Bdd, vars: &[u32]) -> Vec<Vec<bool>> {
        let mut sorted = vars.to_vec();
        sorted.sort_unstable();
        let mut out = Vec::new();
        for cube in self.cubes(f) {
            let fixed: FxHashMap<u32, bool> = cube.iter().copied().collect();
            assert!(fixed.keys().all(|v| sorted.binary_search(v).is_ok()), "support outside the enumerated variables");
            let free: Vec<usize> = (0..sorted.len()).filter(|&k| !fixed.contains_key(&sorted[k])).collect();
            for bits in 0u64..(1u64 << free.len()) {
                let mut row: Vec<bool> = sorted.iter().map(|v| fixed.get(v).copied().unwrap_or(false)).collect();
                for (j, &k) in free.iter().enumerate() {
                    row[k] = bits >> (free.len() - 1 - j) & 1 == 1;
                }
                out.push(row);
            }
        }
        out.sort();
        out
    }

    /// Graphviz rendering of `f`.
    pub fn to_dot(&self, f: Bdd, name: impl Fn(u32) -> String) -> String {
        let mut out = String::from("digraph bdd {\n  n0 [shape=box,label=\"0\"];\n  n1 [shape=box,label=\"1\"];\n");
        let mut seen = rustc_hash::FxHashSet::default();
        let mut stack = vec![f.0];
        let mut order = Vec::new();
        while let Some(n) = stack.pop() {
            if n >= 2 && seen.insert(n) {
                order.push(n);
                let node = self.nodes[n as usize];
                stack.push(node.hi);
                stack.push(node.lo);
            }
        }
        for n in order {
            let node = self.nodes[n as usize];
            let _ = writeln!(out, "  n{n} [label=\"{}\"];", name(node.var));
            let _ = writeln!(out, "  n{n} -> n{} [style=dashed];", node.lo);
            let _ = writeln!(out, "  n{n} -> n{};", node.hi);
        }
        out.push_str("}\n");
        out
    }

    /// Drops every node not reachable from `roots` and clears the
    /// operation caches. Returns the roots' new handles, in order; all
    /// other handles become invalid.
    pub fn collect(&mut self, roots: &[Bdd]) -> Vec<Bdd> {
        let mut live = vec![false; self.nodes.len()];
        live[0] = true;
        live[1] = true;
        let mut stack: Vec<u32> = roots.iter().map(|r| r.0).collect();
        while let Some(n) = stack.pop() {
            if !live[n as usize] {
                live[n as usize] = true;
                let node = self.nodes[n as usize];
                stack.push(node.lo);
                stack.push(node.hi);
            }
        }
        // Children always precede their parents, so one forward pass remaps.
        let mut remap = vec![0u32; self.nodes.len()];
        let mut nodes = Vec::with_capacity(live.iter().filter(|&&l| l).count());
        self.unique.clear();
        for (old, node) in self.nodes.iter().enumerate() {
            if !live[old] {
                continue;
            }
            let new = nodes.len() as u32;
            remap[old] = new;
            if old < 2 {
                nodes.push(*node);
            } else {
                let moved = Node { var: node.var, lo: remap[node.lo as usize], hi: remap[node.hi as usize] };
                self.unique.insert((moved.var, moved.lo, moved.hi), new);
                nodes.push(moved);
            }
        }
        self.nodes = nodes;
        self.cache2.clear();
        self.cache3.clear();
        roots.iter().map(|r| Bdd(remap[r.0 as usize])).collect()
    }
}

/// Iterator over the path cubes of a diagram.
pub struct Cubes<'a> {
    mgr: &'a BddManager,
    stack: Vec<(u32, usize, Option<Literal>)>,
    path: Vec<Literal>,
}

impl Iterator for Cubes<'_> {
    type Item = Vec<Literal>;

    fn next(&mut self) -> Option<Vec<Literal>> {
        while let Some((n, depth, lit)) = self.stack.pop() {
            self.path.truncate(depth);
            if let Some(l) = lit {
                self.path.push(l);
            }
            match n {
                0 => continue,
                1 => return Some(self.path.clone()),
                _ => {
                    let node = self.mgr.nodes[n as usize];
                    let d = self.path.len();
                    self.stack.push((node.hi, d, Some((node.var, true))));
                    self.stack.push((node.lo, d, Some((node.var, false))));
                }
            }
        }
        None
    }
}
