//! Symbolic two-player game built from a system.
//!
//! Control states (turn bit set) pick an interaction and record which other
//! interactions they saw enabled; environment states (turn bit clear)
//! execute the chosen interaction, resolving guards and nondeterministic
//! updates.

use std::collections::BTreeSet;

use crate::bdd::{Bdd, BddError, BddManager, DEFAULT_CAPACITY};
use crate::explicit::Configuration;
use crate::model::{Expr, Interaction, PrioritySet, RiskAtom, RiskSpec, System, VisibilityMatrix};

/// Bits needed to address `n` values.
pub fn bits_for(n: usize) -> usize {
    let mut b = 0;
    while (1usize << b) < n {
        b += 1;
    }
    b
}

/// Allocation of state variables. State variable `k` lives at decision
/// variable `2k` and its primed copy at `2k + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameContext {
    pub turn: usize,
    pub code: Vec<usize>,
    pub vis: Vec<usize>,
    pub locations: Vec<Vec<usize>>,
    pub data: Vec<Vec<usize>>,
    pub num_state_vars: usize,
    pub num_interactions: usize,
}

impl GameContext {
    pub fn allocate(s: &System) -> GameContext {
        let n = s.num_interactions();
        let mut next = 0usize;
        let mut take = |k: usize| {
            let v: Vec<usize> = (next..next + k).collect();
            next += k;
            v
        };
        let turn = take(1)[0];
        let code = take(bits_for(n));
        let vis = take(n);
        let mut locations = Vec::new();
        let mut data = Vec::new();
        for c in &s.components {
            locations.push(take(bits_for(c.locations.len())));
            data.push(take(c.variables.len()));
        }
        GameContext { turn, code, vis, locations, data, num_state_vars: next, num_interactions: n }
    }

    pub fn cur(k: usize) -> u32 {
        (2 * k) as u32
    }

    pub fn next(k: usize) -> u32 {
        (2 * k + 1) as u32
    }

    pub fn unprimed_vars(&self) -> Vec<u32> {
        (0..self.num_state_vars).map(Self::cur).collect()
    }

    pub fn primed_vars(&self) -> Vec<u32> {
        (0..self.num_state_vars).map(Self::next).collect()
    }

    /// Location and data bits, component by component.
    pub fn config_vars(&self) -> Vec<usize> {
        self.locations.iter().zip(&self.data).flat_map(|(l, d)| l.iter().chain(d)).copied().collect()
    }
}

/// The relations of one game instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameArena {
    pub control: Bdd,
    pub env: Bdd,
    pub dead: Bdd,
    pub risk: Bdd,
    pub init: Bdd,
}

impl GameArena {
    pub fn bad(&self, game: &mut SymbolicGame) -> Bdd {
        game.mgr.or(self.dead, self.risk)
    }

    fn roots(&self) -> [Bdd; 5] {
        [self.control, self.env, self.dead, self.risk, self.init]
    }

    fn from_roots(r: &[Bdd]) -> GameArena {
        GameArena { control: r[0], env: r[1], dead: r[2], risk: r[3], init: r[4] }
    }
}

/// An environment node of the explicit game: configuration, chosen
/// interaction and the visible alternatives recorded with it.
pub type EnvNode = (Configuration, Interaction, BTreeSet<Interaction>);

/// Owns the decision-diagram manager and the priority-independent parts of
/// the encoding.
pub struct SymbolicGame {
    pub mgr: BddManager,
    pub ctx: GameContext,
    pub system: System,
    pub vis: VisibilityMatrix,
    /// `P_σ`: joint participation of `σ`.
    pub enabled: Vec<Bdd>,
    pub dead: Bdd,
    pub risk: Bdd,
    pub init: Bdd,
    pub env: Bdd,
    unprimed_cube: Bdd,
    primed_cube: Bdd,
    unprimed: Vec<u32>,
    primed: Vec<u32>,
}

impl SymbolicGame {
    pub fn new(system: &System, vis: &VisibilityMatrix, risk: &RiskSpec) -> Result<SymbolicGame, BddError> {
        Self::with_capacity(system, vis, risk, DEFAULT_CAPACITY)
    }

    pub fn with_capacity(
        system: &System,
        vis: &VisibilityMatrix,
        risk: &RiskSpec,
        capacity: usize,
    ) -> Result<SymbolicGame, BddError> {
        let ctx = GameContext::allocate(system);
        let mut mgr = BddManager::with_capacity((2 * ctx.num_state_vars) as u32, capacity);
        let unprimed = ctx.unprimed_vars();
        let primed = ctx.primed_vars();
        let unprimed_cube = mgr.var_set(&unprimed);
        let primed_cube = mgr.var_set(&primed);
        let mut g = SymbolicGame {
            mgr,
            ctx,
            system: system.clone(),
            vis: vis.clone(),
            enabled: Vec::new(),
            dead: Bdd::FALSE,
            risk: Bdd::FALSE,
            init: Bdd::FALSE,
            env: Bdd::FALSE,
            unprimed_cube,
            primed_cube,
            unprimed,
            primed,
        };
        g.enabled = system.interactions().map(|a| g.build_enabled(a)).collect();
        let negs: Vec<Bdd> = g.enabled.clone().into_iter().map(|p| g.mgr.not(p)).collect();
        g.dead = g.mgr.and_all(negs);
        g.risk = g.encode_risk(risk);
        g.init = g.encode_initial();
        g.env = g.build_env();
        g.mgr.status()?;
        Ok(g)
    }

    fn bits(&mut self, vars: &[usize], value: usize, primed: bool) -> Bdd {
        let lits: Vec<(u32, bool)> = vars
            .iter()
            .enumerate()
            .map(|(b, &k)| (if primed { GameContext::next(k) } else { GameContext::cur(k) }, value >> b & 1 == 1))
            .collect();
        self.mgr.cube(&lits)
    }

    /// `enc(l)` for a location of component `i`.
    pub fn location(&mut self, i: usize, l: usize, primed: bool) -> Bdd {
        let vars = self.ctx.locations[i].clone();
        self.bits(&vars, l, primed)
    }

    /// `enc(σ)` over the code bits.
    pub fn code(&mut self, a: Interaction, primed: bool) -> Bdd {
        let vars = self.ctx.code.clone();
        self.bits(&vars, a.0, primed)
    }

    pub fn data_var(&mut self, i: usize, v: usize, primed: bool) -> Bdd {
        let k = self.ctx.data[i][v];
        self.mgr.var(if primed { GameContext::next(k) } else { GameContext::cur(k) })
    }

    pub fn vis_var(&mut self, a: Interaction, primed: bool) -> Bdd {
        let k = self.ctx.vis[a.0];
        self.mgr.var(if primed { GameContext::next(k) } else { GameContext::cur(k) })
    }

    pub fn turn(&mut self, primed: bool) -> Bdd {
        let k = self.ctx.turn;
        self.mgr.var(if primed { GameContext::next(k) } else { GameContext::cur(k) })
    }

    fn guard(&mut self, i: usize, g: &Expr<usize>) -> Bdd {
        match g {
            Expr::Const(b) => self.mgr.constant(*b),
            Expr::Atom(v) => self.data_var(i, *v, false),
            Expr::Not(e) => {
                let f = self.guard(i, e);
                self.mgr.not(f)
            }
            Expr::And(es) => {
                let fs: Vec<Bdd> = es.iter().map(|e| self.guard(i, e)).collect();
                self.mgr.and_all(fs)
            }
            Expr::Or(es) => {
                let fs: Vec<Bdd> = es.iter().map(|e| self.guard(i, e)).collect();
                self.mgr.or_all(fs)
            }
        }
    }

    fn build_enabled(&mut self, a: Interaction) -> Bdd {
        let mut acc = Bdd::TRUE;
        for &i in self.system.participants(a).to_vec().iter() {
            let trans: Vec<_> = self.system.components[i].transitions.iter().filter(|t| t.label == a).cloned().collect();
            let mut local = Bdd::FALSE;
            for t in &trans {
                let l = self.location(i, t.source, false);
                let g = self.guard(i, &t.guard);
                let lg = self.mgr.and(l, g);
                local = self.mgr.or(local, lg);
            }
            acc = self.mgr.and(acc, local);
        }
        acc
    }

    fn risk_expr(&mut self, e: &Expr<RiskAtom>) -> Bdd {
        match e {
            Expr::Const(b) => self.mgr.constant(*b),
            Expr::Atom(RiskAtom::At { component, location }) => self.location(*component, *location, false),
            Expr::Atom(RiskAtom::Var { component, variable }) => self.data_var(*component, *variable, false),
            Expr::Not(x) => {
                let f = self.risk_expr(x);
                self.mgr.not(f)
            }
            Expr::And(es) => {
                let fs: Vec<Bdd> = es.iter().map(|x| self.risk_expr(x)).collect();
                self.mgr.and_all(fs)
            }
            Expr::Or(es) => {
                let fs: Vec<Bdd> = es.iter().map(|x| self.risk_expr(x)).collect();
                self.mgr.or_all(fs)
            }
        }
    }

    fn encode_risk(&mut self, risk: &RiskSpec) -> Bdd {
        self.risk_expr(&risk.0)
    }

    /// Encoding of a configuration over unprimed location and data bits.
    pub fn encode_config(&mut self, c: &Configuration) -> Bdd {
        let mut acc = Bdd::TRUE;
        for i in 0..self.system.components.len() {
            let l = self.location(i, c.locations[i], false);
            let vars = self.ctx.data[i].clone();
            let d = self.bits(&vars, c.valuations[i] as usize, false);
            let ld = self.mgr.and(l, d);
            acc = self.mgr.and(acc, ld);
        }
        acc
    }

    fn encode_initial(&mut self) -> Bdd {
        let c0 = Configuration::initial(&self.system);
        let conf = self.encode_config(&c0);
        let p0 = self.turn(false);
        let code = self.code(Interaction(0), false);
        let vis_vars = self.ctx.vis.clone();
        let novis = self.bits(&vis_vars, 0, false);
        self.mgr.and_all([p0, conf, code, novis])
    }

    /// Valid interaction codes.
    pub fn valid_code(&mut self, primed: bool) -> Bdd {
        let codes: Vec<Bdd> = self.system.interactions().collect::<Vec<_>>().into_iter().map(|a| self.code(a, primed)).collect();
        self.mgr.or_all(codes)
    }

    fn stutter_component(&mut self, i: usize) -> Bdd {
        let vars: Vec<usize> = self.ctx.locations[i].iter().chain(&self.ctx.data[i]).copied().collect();
        self.stutter(&vars)
    }

    fn stutter(&mut self, vars: &[usize]) -> Bdd {
        let mut acc = Bdd::TRUE;
        for &k in vars {
            let a = self.mgr.var(GameContext::cur(k));
            let b = self.mgr.var(GameContext::next(k));
            let eq = self.mgr.iff(a, b);
            acc = self.mgr.and(acc, eq);
        }
        acc
    }

    /// Uncontrollable updates: execute the chosen interaction.
    fn build_env(&mut self) -> Bdd {
        let n = self.system.num_interactions();
        let mut total = Bdd::FALSE;
        for a in self.system.interactions() {
            let parts = self.system.participants(a).to_vec();
            let mut t = self.code(a, false);
            let code_next = self.code(a, true);
            t = self.mgr.and(t, code_next);
            for &i in &parts {
                let trans: Vec<_> = self.system.components[i].transitions.iter().filter(|x| x.label == a).cloned().collect();
                let mut local = Bdd::FALSE;
                for tr in &trans {
                    let src = self.location(i, tr.source, false);
                    let g = self.guard(i, &tr.guard);
                    let tgt = self.location(i, tr.target, true);
                    let mut upd = Bdd::TRUE;
                    for (v, set) in tr.update.iter().enumerate() {
                        let x = self.data_var(i, v, true);
                        let img = match (set.allows(false), set.allows(true)) {
                            (true, true) => Bdd::TRUE,
                            (false, true) => x,
                            (true, false) => self.mgr.not(x),
                            (false, false) => Bdd::FALSE,
                        };
                        upd = self.mgr.and(upd, img);
                    }
                    let one = self.mgr.and_all([src, g, tgt, upd]);
                    local = self.mgr.or(local, one);
                }
                t = self.mgr.and(t, local);
            }
            for b in (0..n).map(Interaction).filter(|&b| b != a) {
                let v = self.vis_var(b, true);
                let nv = self.mgr.not(v);
                t = self.mgr.and(t, nv);
            }
            for i in (0..self.system.components.len()).filter(|i| !parts.contains(i)) {
                let st = self.stutter_component(i);
                t = self.mgr.and(t, st);
            }
            total = self.mgr.or(total, t);
        }
        let p0 = self.turn(false);
        let np0 = self.mgr.not(p0);
        let p0n = self.turn(true);
        let v = self.valid_code(false);
        let vn = self.valid_code(true);
        self.mgr.and_all([np0, p0n, v, vn, total])
    }

    /// Controllable moves under the closed priority set `p`.
    pub fn control_relation(&mut self, p: &PrioritySet) -> Bdd {
        let n = self.system.num_interactions();
        let conf_vars = self.ctx.config_vars();
        let keep = self.stutter(&conf_vars);
        let mut total = Bdd::FALSE;
        for a in self.system.interactions() {
            let mut t = self.enabled[a.0];
            let c = self.code(a, true);
            let va = self.vis_var(a, true);
            t = self.mgr.and_all([t, c, va]);
            for b in (0..n).map(Interaction).filter(|&b| b != a) {
                let vb = self.vis_var(b, true);
                let part = if self.vis.visible(b, a) {
                    self.mgr.iff(self.enabled[b.0], vb)
                } else {
                    self.mgr.not(vb)
                };
                t = self.mgr.and(t, part);
            }
            total = self.mgr.or(total, t);
        }
        total = self.mgr.and(total, keep);
        for prio in p.iter() {
            let s1 = self.vis_var(prio.low, true);
            let s2 = self.vis_var(prio.high, true);
            let both = self.mgr.and(s1, s2);
            let c1 = self.code(prio.low, true);
            let nc1 = self.mgr.not(c1);
            let rule = self.mgr.implies(both, nc1);
            total = self.mgr.and(total, rule);
            let t12 = self.mgr.and(total, both);
            total = self.mgr.diff(total, t12);
            let s1_cube = self.mgr.var_set(&[GameContext::next(self.ctx.vis[prio.low.0])]);
            let lifted = self.mgr.exists(t12, s1_cube);
            let ns1 = self.mgr.not(s1);
            let fixed = self.mgr.and(lifted, ns1);
            total = self.mgr.or(total, fixed);
        }
        let p0 = self.turn(false);
        let np0n = {
            let x = self.turn(true);
            self.mgr.not(x)
        };
        let v = self.valid_code(true);
        self.mgr.and_all([p0, np0n, v, total])
    }

    pub fn arena(&mut self, p: &PrioritySet) -> GameArena {
        let control = self.control_relation(p);
        GameArena { control, env: self.env, dead: self.dead, risk: self.risk, init: self.init }
    }

    pub fn prime(&mut self, f: Bdd) -> Bdd {
        let (from, to) = (self.unprimed.clone(), self.primed.clone());
        self.mgr.substitute(f, &from, &to).expect("aligned variable lists")
    }

    pub fn unprime(&mut self, f: Bdd) -> Bdd {
        let (from, to) = (self.primed.clone(), self.unprimed.clone());
        self.mgr.substitute(f, &from, &to).expect("aligned variable lists")
    }

    /// States reached in one step of `t` from `x`.
    pub fn post(&mut self, t: Bdd, x: Bdd) -> Bdd {
        let img = self.mgr.and_exists(t, x, self.unprimed_cube);
        self.unprime(img)
    }

    /// `∃Ξ′. t ∧ x′`: sources of `t` with a successor in `x`.
    pub fn pre(&mut self, t: Bdd, x: Bdd) -> Bdd {
        let xp = self.prime(x);
        self.mgr.and_exists(t, xp, self.primed_cube)
    }

    /// `∃Ξ′. t`.
    pub fn sources(&mut self, t: Bdd) -> Bdd {
        self.mgr.exists(t, self.primed_cube)
    }

    pub fn exists_primed(&mut self, f: Bdd) -> Bdd {
        self.mgr.exists(f, self.primed_cube)
    }

    pub fn exists_unprimed(&mut self, f: Bdd) -> Bdd {
        self.mgr.exists(f, self.unprimed_cube)
    }

    /// Least fixpoint of the post-image from the initial states.
    pub fn reachable(&mut self, arena: &GameArena) -> Result<Bdd, BddError> {
        let mut r = arena.init;
        let mut frontier = r;
        while !frontier.is_false() {
            let a = self.post(arena.control, frontier);
            let b = self.post(arena.env, frontier);
            let img = self.mgr.or(a, b);
            frontier = self.mgr.diff(img, r);
            r = self.mgr.or(r, frontier);
            self.mgr.status()?;
        }
        Ok(r)
    }

    fn project(&mut self, f: Bdd, keep: &[usize]) -> Bdd {
        let keep: BTreeSet<u32> = keep.iter().map(|&k| GameContext::cur(k)).collect();
        let drop: Vec<u32> = (0..self.mgr.num_vars()).filter(|v| !keep.contains(v)).collect();
        let cube = self.mgr.var_set(&drop);
        self.mgr.exists(f, cube)
    }

    fn decode_config(&self, bits: &[bool]) -> Configuration {
        let mut pos = 0;
        let mut locations = Vec::new();
        let mut valuations = Vec::new();
        for i in 0..self.ctx.locations.len() {
            let mut l = 0usize;
            for b in 0..self.ctx.locations[i].len() {
                l |= usize::from(bits[pos + b]) << b;
            }
            pos += self.ctx.locations[i].len();
            let mut v = 0u64;
            for b in 0..self.ctx.data[i].len() {
                v |= u64::from(bits[pos + b]) << b;
            }
            pos += self.ctx.data[i].len();
            locations.push(l);
            valuations.push(v);
        }
        Configuration { locations, valuations }
    }

    /// Configurations of the states in `f` (either turn), dropping codes
    /// that do not name a location.
    pub fn configurations(&mut self, f: Bdd) -> BTreeSet<Configuration> {
        let keep = self.ctx.config_vars();
        let proj = self.project(f, &keep);
        let vars: Vec<u32> = keep.iter().map(|&k| GameContext::cur(k)).collect();
        self.mgr
            .minterms(proj, &vars)
            .iter()
            .map(|m| self.decode_config(m))
            .filter(|c| c.locations.iter().zip(&self.system.components).all(|(&l, comp)| l < comp.locations.len()))
            .collect()
    }

    /// Number of distinct configurations among the states of `f`.
    pub fn count_configurations(&mut self, f: Bdd) -> f64 {
        let keep = self.ctx.config_vars();
        let proj = self.project(f, &keep);
        let vars: Vec<u32> = keep.iter().map(|&k| GameContext::cur(k)).collect();
        self.mgr.sat_count(proj, &vars)
    }

    /// Control states of `f`, as configurations.
    pub fn control_configurations(&mut self, f: Bdd) -> BTreeSet<Configuration> {
        let p0 = self.turn(false);
        let g = self.mgr.and(f, p0);
        self.configurations(g)
    }

    /// Environment states of `f` with their chosen interaction and the
    /// visible alternatives.
    pub fn env_nodes(&mut self, f: Bdd) -> BTreeSet<EnvNode> {
        let p0 = self.turn(false);
        let np0 = self.mgr.not(p0);
        let g = self.mgr.and(f, np0);
        let mut keep = self.ctx.config_vars();
        let nconf = keep.len();
        keep.extend(self.ctx.code.iter().chain(&self.ctx.vis));
        let proj = self.project(g, &keep);
        // Minterms come out in variable order, so re-sort the columns.
        let mut order: Vec<usize> = (0..keep.len()).collect();
        order.sort_by_key(|&j| keep[j]);
        let sorted_vars: Vec<u32> = order.iter().map(|&j| GameContext::cur(keep[j])).collect();
        let ncode = self.ctx.code.len();
        let mut out = BTreeSet::new();
        for m in self.mgr.minterms(proj, &sorted_vars) {
            let mut bits = vec![false; keep.len()];
            for (pos, &j) in order.iter().enumerate() {
                bits[j] = m[pos];
            }
            let c = self.decode_config(&bits[..nconf]);
            let code = (0..ncode).fold(0usize, |acc, b| acc | usize::from(bits[nconf + b]) << b);
            let alt: BTreeSet<Interaction> = (0..self.ctx.num_interactions)
                .filter(|&t| t != code && bits[nconf + ncode + t])
                .map(Interaction)
                .collect();
            out.insert((c, Interaction(code), alt));
        }
        out
    }

    pub fn unprimed_vars(&self) -> &[u32] {
        &self.unprimed
    }

    pub fn primed_vars(&self) -> &[u32] {
        &self.primed
    }

    /// Garbage-collects, keeping the game's own diagrams and `extra`, which
    /// is updated in place.
    pub fn collect(&mut self, extra: &mut [Bdd]) {
        let mut roots: Vec<Bdd> = self.enabled.clone();
        roots.extend([self.dead, self.risk, self.init, self.env, self.unprimed_cube, self.primed_cube]);
        let own = roots.len();
        roots.extend(extra.iter().copied());
        let new = self.mgr.collect(&roots);
        let n = self.enabled.len();
        self.enabled.copy_from_slice(&new[..n]);
        self.dead = new[n];
        self.risk = new[n + 1];
        self.init = new[n + 2];
        self.env = new[n + 3];
        self.unprimed_cube = new[n + 4];
        self.primed_cube = new[n + 5];
        extra.copy_from_slice(&new[own..]);
    }

    /// Collects garbage when the table is past `threshold` nodes.
    pub fn maybe_collect(&mut self, threshold: usize, extra: &mut [Bdd]) {
        if self.mgr.len() > threshold {
            self.collect(extra);
        }
    }

    pub fn collect_arena(&mut self, arena: &mut GameArena, extra: &mut [Bdd]) {
        let mut all: Vec<Bdd> = arena.roots().to_vec();
        all.extend(extra.iter().copied());
        self.collect(&mut all);
        *arena = GameArena::from_roots(&all[..5]);
        extra.copy_from_slice(&all[5..]);
    }
}
