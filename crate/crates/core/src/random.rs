//! Seeded random small systems for property and agreement tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{CommArchitecture, Component, Expr, Interaction, Model, Priority, PrioritySet, RiskAtom, RiskSpec, System, Transition, ValueSet};

/// Size limits of generated systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub components: usize,
    pub locations: usize,
    pub variables: usize,
    pub interactions: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { components: 3, locations: 3, variables: 2, interactions: 5 }
    }
}

fn guard(rng: &mut ChaCha8Rng, nvars: usize) -> Expr<usize> {
    if nvars == 0 || rng.gen_bool(0.5) {
        return Expr::tt();
    }
    let atom = |rng: &mut ChaCha8Rng| {
        let a = Expr::Atom(rng.gen_range(0..nvars));
        if rng.gen_bool(0.5) {
            Expr::not(a)
        } else {
            a
        }
    };
    if nvars > 1 && rng.gen_bool(0.3) {
        let (a, b) = (atom(rng), atom(rng));
        if rng.gen_bool(0.5) {
            Expr::And(vec![a, b])
        } else {
            Expr::Or(vec![a, b])
        }
    } else {
        atom(rng)
    }
}

fn value_set(rng: &mut ChaCha8Rng) -> ValueSet {
    match rng.gen_range(0..4) {
        0 => ValueSet::FALSE,
        1 => ValueSet::TRUE,
        2 => ValueSet::ANY,
        // Frequently keep things small and deterministic.
        _ => ValueSet::FALSE,
    }
}

/// A random model with a deployable architecture and closed, acyclic
/// priorities.
pub fn random_model(seed: u64, limits: Limits) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = rng.gen_range(1..=limits.components);
    let ni = rng.gen_range(1..=limits.interactions);
    let mut parts: Vec<Vec<usize>> = (0..ni)
        .map(|_| {
            let mut p: Vec<usize> = (0..nc).filter(|_| rng.gen_bool(0.45)).collect();
            if p.is_empty() {
                p.push(rng.gen_range(0..nc));
            }
            p
        })
        .collect();
    for c in 0..nc {
        if !parts.iter().any(|p| p.contains(&c)) {
            let a = rng.gen_range(0..ni);
            parts[a].push(c);
            parts[a].sort_unstable();
        }
    }
    let mut comps = Vec::new();
    for c in 0..nc {
        let nl = rng.gen_range(1..=limits.locations);
        let nv = rng.gen_range(0..=limits.variables);
        let mut ts = Vec::new();
        for (a, p) in parts.iter().enumerate() {
            if !p.contains(&c) {
                continue;
            }
            for _ in 0..rng.gen_range(1..=2) {
                ts.push(Transition {
                    source: rng.gen_range(0..nl),
                    guard: guard(&mut rng, nv),
                    label: Interaction(a),
                    update: (0..nv).map(|_| value_set(&mut rng)).collect(),
                    target: rng.gen_range(0..nl),
                });
            }
        }
        // Every location gets a way out, so not every run ends in a dead end.
        let alphabet: Vec<usize> = (0..ni).filter(|a| parts[*a].contains(&c)).collect();
        for l in 0..nl {
            if !ts.iter().any(|t: &Transition| t.source == l) {
                ts.push(Transition {
                    source: l,
                    guard: guard(&mut rng, nv),
                    label: Interaction(alphabet[rng.gen_range(0..alphabet.len())]),
                    update: (0..nv).map(|_| value_set(&mut rng)).collect(),
                    target: rng.gen_range(0..nl),
                });
            }
        }
        let init: Vec<bool> = (0..nv).map(|_| rng.gen_bool(0.5)).collect();
        comps.push(
            Component::new(
                format!("C{c}"),
                (0..nl).map(|l| format!("l{l}")).collect(),
                (0..nv).map(|v| format!("x{v}")).collect(),
                ts,
                0,
                init,
            )
            .expect("well-formed"),
        );
    }
    let mut prios = PrioritySet::new();
    for _ in 0..rng.gen_range(0..=2) {
        if ni < 2 {
            break;
        }
        let lo = rng.gen_range(0..ni);
        let hi = rng.gen_range(0..ni);
        let mut trial = prios.clone();
        trial.insert(Priority::new(Interaction(lo), Interaction(hi)));
        if trial.transitive_closure().is_irreflexive() {
            prios = trial;
        }
    }
    let names = (0..ni).map(|a| format!("i{a}")).collect();
    let system = System::new(comps, names, prios).expect("well-formed");
    let mut com = CommArchitecture::mandated(&system);
    for i in 0..nc {
        for j in 0..nc {
            if rng.gen_bool(0.3) {
                com.insert(i, j);
            }
        }
    }
    let risk = if rng.gen_bool(0.3) {
        let c = rng.gen_range(0..nc);
        let l = rng.gen_range(0..system.components[c].locations.len());
        let mut atoms = vec![Expr::Atom(RiskAtom::At { component: c, location: l })];
        let nv = system.components[c].variables.len();
        if nv > 0 && rng.gen_bool(0.5) {
            atoms.push(Expr::Atom(RiskAtom::Var { component: c, variable: rng.gen_range(0..nv) }));
        }
        RiskSpec(Expr::And(atoms))
    } else {
        RiskSpec::none()
    };
    Model { system, architecture: com, risk }
}

/// `count` models from consecutive seeds starting at `seed`.
pub fn corpus(seed: u64, count: usize) -> Vec<Model> {
    (0..count as u64).map(|k| random_model(seed.wrapping_add(k), Limits::default())).collect()
}
