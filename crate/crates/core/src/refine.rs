//! State-based refinement of the alphabet.
//!
//! An interaction `σ` is split into `σ@l`, one copy per source location `l`
//! of a designated participant: the one with the most source locations for
//! `σ`, ties going to the lowest index. The designated participant keeps
//! each transition under the copy of its source location; every other
//! participant carries its `σ`-transitions under all copies.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Component, Interaction, ModelError, Priority, PrioritySet, System};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refined {
    pub system: System,
    /// Original interaction of every refined interaction.
    pub origin: Vec<Interaction>,
    /// Original interactions that were split.
    pub split: BTreeSet<Interaction>,
}

impl Refined {
    /// The identity refinement.
    pub fn identity(s: &System) -> Refined {
        Refined { system: s.clone(), origin: s.interactions().collect(), split: BTreeSet::new() }
    }
}

fn designated(s: &System, a: Interaction) -> usize {
    let mut best = s.participants(a)[0];
    for &i in s.participants(a) {
        if s.components[i].source_locations(a).len() > s.components[best].source_locations(a).len() {
            best = i;
        }
    }
    best
}

/// Splits every interaction in `targets` that has more than one source
/// location at its designated participant.
pub fn refine_alphabet(s: &System, targets: &BTreeSet<Interaction>) -> Result<Refined, ModelError> {
    let mut names = Vec::new();
    let mut origin = Vec::new();
    // Original interaction -> (designated participant, location -> copy).
    let mut copies: BTreeMap<Interaction, (Option<usize>, BTreeMap<usize, Interaction>)> = BTreeMap::new();
    let mut split = BTreeSet::new();
    for a in s.interactions() {
        let d = designated(s, a);
        let sources = s.components[d].source_locations(a);
        if targets.contains(&a) && sources.len() > 1 {
            let mut m = BTreeMap::new();
            for l in sources {
                m.insert(l, Interaction(names.len()));
                names.push(format!("{}@{}", s.interaction_name(a), s.components[d].locations[l]));
                origin.push(a);
            }
            copies.insert(a, (Some(d), m));
            split.insert(a);
        } else {
            copies.insert(a, (None, BTreeMap::from([(0, Interaction(names.len()))])));
            names.push(s.interaction_name(a).to_string());
            origin.push(a);
        }
    }
    let mut components = Vec::new();
    for (i, c) in s.components.iter().enumerate() {
        let mut transitions = Vec::new();
        for t in &c.transitions {
            let (d, m) = &copies[&t.label];
            match d {
                None => transitions.push(relabel(t, m[&0])),
                Some(d) if *d == i => transitions.push(relabel(t, m[&t.source])),
                Some(_) => transitions.extend(m.values().map(|&b| relabel(t, b))),
            }
        }
        components.push(Component::new(
            c.name.clone(),
            c.locations.clone(),
            c.variables.clone(),
            transitions,
            c.initial_location,
            c.initial_valuation.clone(),
        )?);
    }
    let mut priorities = PrioritySet::new();
    for p in s.priorities() {
        for &lo in copies[&p.low].1.values() {
            for &hi in copies[&p.high].1.values() {
                priorities.insert(Priority::new(lo, hi));
            }
        }
    }
    let system = System::new(components, names, priorities)?;
    Ok(Refined { system, origin, split })
}

fn relabel(t: &crate::model::Transition, label: Interaction) -> crate::model::Transition {
    crate::model::Transition { label, ..t.clone() }
}

/// Splits every interaction.
pub fn refine_all(s: &System) -> Result<Refined, ModelError> {
    refine_alphabet(s, &s.interactions().collect())
}
