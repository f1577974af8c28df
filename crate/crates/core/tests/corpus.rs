mod common;

use std::collections::BTreeSet;

use common::ExplicitGame;
use dps_core::attractor;
use dps_core::engine::{self, Options, Status};
use dps_core::explicit::{self, DEFAULT_STATE_CAP};
use dps_core::game::SymbolicGame;
use dps_core::random;

const SEED: u64 = 0x5eed;
const COUNT: usize = 150;

fn unbounded() -> Options {
    Options { budget: None, check_fixes: true, ..Options::default() }
}

#[test]
fn symbolic_reachability_and_attractor_match_explicit() {
    for (k, m) in random::corpus(SEED, COUNT).into_iter().enumerate() {
        let s = &m.system;
        let vis = m.architecture.visibility_matrix(s);
        let mut g = SymbolicGame::new(s, &vis, &m.risk).unwrap();
        let arena = g.arena(s.priorities());
        let a = attractor::analyze(&mut g, &arena).unwrap();
        let sym = g.configurations(a.reach);
        let exp = explicit::reachable(s, DEFAULT_STATE_CAP).unwrap().as_set();
        assert_eq!(sym, exp, "reachable sets differ on model {k}");

        let dead = g.mgr.and(a.reach, g.dead);
        let exp_dead: BTreeSet<_> = exp.iter().filter(|c| explicit::deadlocked(s, c)).cloned().collect();
        assert_eq!(g.configurations(dead), exp_dead, "deadlocks differ on model {k}");

        let game = ExplicitGame::build(s, &vis, &m.risk);
        let na = game.nested_attractor();
        assert_eq!(g.control_configurations(a.nested.attractor), game.control_configs(&na), "control part of the attractor differs on model {k}");
        assert_eq!(g.env_nodes(a.nested.attractor), game.env_nodes(&na), "environment part of the attractor differs on model {k}");
    }
}

#[test]
fn distributed_and_global_enabledness_agree() {
    for m in random::corpus(SEED, COUNT) {
        let s = &m.system;
        for c in explicit::reachable(s, DEFAULT_STATE_CAP).unwrap().states {
            let d = explicit::distributively_enabled(s, &m.architecture, &c);
            assert_eq!(d, explicit::globally_enabled(s, &c));
            assert_eq!(d.is_empty(), explicit::deadlocked(s, &c));
        }
    }
}

#[test]
fn synthesis_agrees_with_brute_force() {
    for (k, m) in random::corpus(SEED, COUNT).into_iter().enumerate() {
        let s = &m.system;
        let oracle = explicit::brute_force_synthesize(s, &m.architecture, &m.risk, DEFAULT_STATE_CAP).unwrap();
        let r = engine::synthesize(s, &m.architecture, &m.risk, &unbounded()).unwrap();
        assert_eq!(r.status == Status::Success, oracle.is_some(), "verdicts differ on model {k}: {:?}", r.evidence);
        assert_ne!(r.status, Status::Exhausted);
        assert_eq!(r.stats.fix_check_failures, 0, "unsound fix on model {k}");
        if r.status == Status::Success {
            let v = engine::validate_result(s, &m.architecture, &m.risk, &r.added, DEFAULT_STATE_CAP);
            assert!(v.ok(), "model {k}: {v:?}");
        }
    }
}
