//! Risk attractors on the symbolic game.

use serde::Serialize;

use crate::bdd::{Bdd, BddError};
use crate::game::{GameArena, SymbolicGame};
use crate::model::Interaction;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AttractorStats {
    pub outer_iters: usize,
    pub inner_iters: usize,
}

impl std::ops::AddAssign for AttractorStats {
    fn add_assign(&mut self, o: AttractorStats) {
        self.outer_iters += o.outer_iters;
        self.inner_iters += o.inner_iters;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NestedAttractorResult {
    pub attractor: Bdd,
    /// `𝒯_f`: control transitions from outside the attractor into it.
    pub bad_entering: Bdd,
    pub stats: AttractorStats,
}

/// `Esc`: the chosen interaction is the only one marked visible and
/// enabled.
pub fn escape_predicate(g: &mut SymbolicGame) -> Bdd {
    let n = g.ctx.num_interactions;
    let mut esc = Bdd::FALSE;
    for a in (0..n).map(Interaction) {
        let c = g.code(a, true);
        let v = g.vis_var(a, true);
        let mut t = g.mgr.and(c, v);
        for b in (0..n).filter(|&b| b != a.0).map(Interaction) {
            let vb = g.vis_var(b, true);
            let nvb = g.mgr.not(vb);
            t = g.mgr.and(t, nvb);
        }
        esc = g.mgr.or(esc, t);
    }
    esc
}

/// Restricts relations and bad sets to the reachable states `reach`.
pub fn prune(g: &mut SymbolicGame, arena: &GameArena, reach: Bdd) -> GameArena {
    GameArena {
        control: g.mgr.and(arena.control, reach),
        env: g.mgr.and(arena.env, reach),
        dead: g.mgr.and(arena.dead, reach),
        risk: g.mgr.and(arena.risk, reach),
        init: arena.init,
    }
}

/// Least fixpoint of the environment attractor step from `seed`: add
/// environment states with a successor inside and control states whose
/// successors all lie inside.
pub fn risk_attractor(g: &mut SymbolicGame, arena: &GameArena, seed: Bdd) -> Result<(Bdd, usize), BddError> {
    let mut x = seed;
    let mut iters = 0;
    loop {
        iters += 1;
        let env_pre = g.pre(arena.env, x);
        let ctrl_in = g.pre(arena.control, x);
        let nx = g.mgr.not(x);
        let ctrl_out = g.pre(arena.control, nx);
        let forced = g.mgr.diff(ctrl_in, ctrl_out);
        let next = g.mgr.or_all([x, env_pre, forced]);
        g.mgr.status()?;
        if next == x {
            return Ok((x, iters));
        }
        x = next;
    }
}

/// Control transitions leaving the complement of `x` into `x`.
pub fn bad_entering(g: &mut SymbolicGame, arena: &GameArena, x: Bdd) -> Bdd {
    let xp = g.prime(x);
    let src = g.sources(arena.control);
    let t = g.mgr.and(arena.control, xp);
    let t = g.mgr.diff(t, x);
    g.mgr.and(t, src)
}

/// Nested risk attractor of a pruned arena, starting from `seed` (the bad
/// states when `None`).
pub fn nested_risk_attractor(
    g: &mut SymbolicGame,
    arena: &GameArena,
    seed: Option<Bdd>,
) -> Result<NestedAttractorResult, BddError> {
    let esc = escape_predicate(g);
    let mut x = match seed {
        Some(s) => s,
        None => arena.bad(g),
    };
    let mut stats = AttractorStats::default();
    loop {
        stats.outer_iters += 1;
        let (attr, inner) = risk_attractor(g, arena, x)?;
        stats.inner_iters += inner;
        let t = bad_entering(g, arena, attr);
        let escaping = g.mgr.and(t, esc);
        let new_bad = g.exists_primed(escaping);
        let next = g.mgr.or(attr, new_bad);
        g.mgr.status()?;
        if next == attr {
            return Ok(NestedAttractorResult { attractor: attr, bad_entering: t, stats });
        }
        x = next;
    }
}

/// Whether the initial state lies in the attractor.
pub fn infeasible_at_base(g: &mut SymbolicGame, init: Bdd, attractor: Bdd) -> bool {
    !g.mgr.and(init, attractor).is_false()
}

/// Adds every source state of `𝒯_f`.
pub fn overapproximate(g: &mut SymbolicGame, attractor: Bdd, bad_entering: Bdd) -> Bdd {
    let src = g.exists_primed(bad_entering);
    g.mgr.or(attractor, src)
}

/// Reachability, pruning and the nested attractor in one go.
#[derive(Clone, Copy, Debug)]
pub struct Analysis {
    pub reach: Bdd,
    pub arena: GameArena,
    pub nested: NestedAttractorResult,
}

pub fn analyze(g: &mut SymbolicGame, arena: &GameArena) -> Result<Analysis, BddError> {
    let reach = g.reachable(arena)?;
    let pruned = prune(g, arena, reach);
    let nested = nested_risk_attractor(g, &pruned, None)?;
    Ok(Analysis { reach, arena: pruned, nested })
}
