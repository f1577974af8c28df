//! The four-interaction conflict-resolution example with interactions
//! a, b, c, g and five off-diagonal visibility constraints.

use std::collections::BTreeSet;

use dps_core::bdd::Bdd;
use dps_core::fixer::{compile_clauses, resolve_fix, ClauseFamily, FixOutcome, FixStats, RiskEdgeCube};
use dps_core::model::{Interaction, Priority, PrioritySet, VisibilityMatrix};

const A: Interaction = Interaction(0);
const B: Interaction = Interaction(1);
const C: Interaction = Interaction(2);
const G: Interaction = Interaction(3);

fn vis(extra: &[(Interaction, Interaction)]) -> VisibilityMatrix {
    let mut v = VisibilityMatrix::all(4);
    for x in [A, B, C, G] {
        for y in [A, B, C, G] {
            if x != y {
                v.set(x, y, false);
            }
        }
    }
    // (observed, by)
    for &(o, by) in [(C, A), (B, A), (C, B), (A, G), (A, B)].iter().chain(extra) {
        v.set(o, by, true);
    }
    v
}

fn cubes() -> Vec<RiskEdgeCube> {
    let cube = |chosen, alts: &[Interaction]| RiskEdgeCube { chosen, alternatives: alts.iter().copied().collect(), sources: Bdd::TRUE };
    vec![cube(A, &[B, C]), cube(G, &[A]), cube(B, &[A])]
}

fn set(ps: &[(Interaction, Interaction)]) -> PrioritySet {
    ps.iter().map(|&(l, h)| Priority::new(l, h)).collect()
}

#[test]
fn candidate_families() {
    let fam: Vec<BTreeSet<Priority>> = cubes().iter().map(|c| c.candidates().collect()).collect();
    assert_eq!(fam, vec![set(&[(A, B), (A, C)]).iter().collect(), set(&[(G, A)]).iter().collect(), set(&[(B, A)]).iter().collect()]);
}

#[test]
fn circular_assignment_rejected() {
    let f = compile_clauses(&cubes(), &PrioritySet::new(), &vis(&[]));
    assert!(f.evaluate(&set(&[(A, B), (G, B), (B, A)])).is_err());
}

#[test]
fn suggested_assignment_needs_g_below_c() {
    // a≺c and g≺a imply g≺c, which g cannot observe.
    let f = compile_clauses(&cubes(), &PrioritySet::new(), &vis(&[]));
    let suggested = set(&[(A, C), (G, A), (B, A)]);
    assert_eq!(f.evaluate(&suggested), Err(ClauseFamily::Transitivity));
    assert_eq!(f.evaluate(&suggested.transitive_closure()), Err(ClauseFamily::Architecture));
}

#[test]
fn unsatisfiable_under_listed_visibility() {
    let v = vis(&[]);
    let f = compile_clauses(&cubes(), &PrioritySet::new(), &v);
    match resolve_fix(&f, &v, false, &mut FixStats::default()).unwrap() {
        FixOutcome::NoFix(g) => assert!(g.interactions.contains(&A)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn solver_output_satisfies_every_family_once_g_sees_c() {
    let v = vis(&[(C, G)]);
    let f = compile_clauses(&cubes(), &PrioritySet::new(), &v);
    match resolve_fix(&f, &v, false, &mut FixStats::default()).unwrap() {
        FixOutcome::Fixed { added, model } => {
            assert_eq!(f.evaluate(&model), Ok(()));
            assert!(added.contains(&Priority::new(A, C)) && added.contains(&Priority::new(G, A)) && added.contains(&Priority::new(B, A)));
        }
        other => panic!("{other:?}"),
    }
}
