//! Components, systems, communication architectures and priorities.
//!
//! A [`System`] is a set of [`Component`]s synchronising on shared
//! interaction labels, together with a transitive, irreflexive
//! [`PrioritySet`]. A [`CommArchitecture`] states which components inform
//! which, and induces the [`VisibilityMatrix`] used by the synthesis engine.

mod arch;
mod document;
mod expr;
mod priority;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use arch::{CommArchitecture, Violation, ViolationKind, VisibilityMatrix};
pub use document::{parse_system, ComponentDoc, ModelDocument, TransitionDoc};
pub use expr::{Expr, RiskAtom};
pub use priority::{Interaction, Priority, PrioritySet};

/// Maximum number of Boolean variables per component.
pub const MAX_VARIABLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("reference error: {0}")]
    Reference(String),
    #[error("update of `{variable}` in component `{component}` has an empty image")]
    EmptyUpdate { component: String, variable: String },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Nonempty set of values a variable may take after a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ValueSet(u8);

impl ValueSet {
    pub const FALSE: ValueSet = ValueSet(0b01);
    pub const TRUE: ValueSet = ValueSet(0b10);
    pub const ANY: ValueSet = ValueSet(0b11);

    pub fn from_values(values: &[bool]) -> Option<ValueSet> {
        let bits = values.iter().fold(0u8, |acc, &b| acc | if b { 0b10 } else { 0b01 });
        (bits != 0).then_some(ValueSet(bits))
    }

    pub fn exact(value: bool) -> ValueSet {
        if value {
            Self::TRUE
        } else {
            Self::FALSE
        }
    }

    pub fn allows(self, value: bool) -> bool {
        self.0 & if value { 0b10 } else { 0b01 } != 0
    }

    pub fn values(self) -> impl Iterator<Item = bool> {
        [false, true].into_iter().filter(move |&b| self.allows(b))
    }
}

pub type Guard = Expr<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub source: usize,
    pub guard: Guard,
    pub label: Interaction,
    /// One entry per component variable.
    pub update: Vec<ValueSet>,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub locations: Vec<String>,
    pub variables: Vec<String>,
    pub alphabet: BTreeSet<Interaction>,
    pub transitions: Vec<Transition>,
    pub initial_location: usize,
    pub initial_valuation: Vec<bool>,
    outgoing: BTreeMap<(usize, Interaction), Vec<usize>>,
}

impl Component {
    /// Builds a component; the alphabet is the set of transition labels.
    pub fn new(
        name: impl Into<String>,
        locations: Vec<String>,
        variables: Vec<String>,
        transitions: Vec<Transition>,
        initial_location: usize,
        initial_valuation: Vec<bool>,
    ) -> Result<Component, ModelError> {
        let name = name.into();
        if locations.is_empty() {
            return Err(ModelError::Invalid(format!("component `{name}` has no locations")));
        }
        if variables.len() > MAX_VARIABLES {
            return Err(ModelError::Invalid(format!(
                "component `{name}` has more than {MAX_VARIABLES} variables"
            )));
        }
        if initial_location >= locations.len() {
            return Err(ModelError::Reference(format!("initial location of `{name}` out of range")));
        }
        if initial_valuation.len() != variables.len() {
            return Err(ModelError::Invalid(format!("initial valuation of `{name}` is not total")));
        }
        let mut outgoing: BTreeMap<(usize, Interaction), Vec<usize>> = BTreeMap::new();
        for (k, t) in transitions.iter().enumerate() {
            if t.source >= locations.len() || t.target >= locations.len() {
                return Err(ModelError::Reference(format!("transition of `{name}` uses an unknown location")));
            }
            if t.update.len() != variables.len() {
                return Err(ModelError::Invalid(format!("update relation of `{name}` must cover every variable")));
            }
            if let Some(&&v) = t.guard.atoms().iter().find(|&&&v| v >= variables.len()) {
                return Err(ModelError::Reference(format!("guard of `{name}` uses unknown variable #{v}")));
            }
            outgoing.entry((t.source, t.label)).or_default().push(k);
        }
        let alphabet: BTreeSet<Interaction> = transitions.iter().map(|t| t.label).collect();
        if alphabet.is_empty() {
            return Err(ModelError::Invalid(format!("component `{name}` has an empty alphabet")));
        }
        Ok(Component { name, locations, variables, alphabet, transitions, initial_location, initial_valuation, outgoing })
    }

    /// Transitions labelled `label` leaving `location`.
    pub fn outgoing(&self, location: usize, label: Interaction) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing
            .get(&(location, label))
            .into_iter()
            .flatten()
            .map(move |&k| &self.transitions[k])
    }

    /// Distinct source locations of transitions labelled `label`.
    pub fn source_locations(&self, label: Interaction) -> BTreeSet<usize> {
        self.transitions.iter().filter(|t| t.label == label).map(|t| t.source).collect()
    }

    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l == name)
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }
}

/// A system of interacting components with its (closed) priority set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    pub components: Vec<Component>,
    interactions: Vec<String>,
    participants: Vec<Vec<usize>>,
    priorities: PrioritySet,
}

impl System {
    /// `interactions` names the alphabet in index order; `priorities` is
    /// closed here and must come out irreflexive.
    pub fn new(
        components: Vec<Component>,
        interactions: Vec<String>,
        priorities: PrioritySet,
    ) -> Result<System, ModelError> {
        if components.is_empty() {
            return Err(ModelError::Invalid("a system needs at least one component".into()));
        }
        let mut seen = BTreeSet::new();
        for name in &interactions {
            if !seen.insert(name.as_str()) {
                return Err(ModelError::Invalid(format!("duplicate interaction `{name}`")));
            }
        }
        let mut names = BTreeSet::new();
        for c in &components {
            if !names.insert(c.name.as_str()) {
                return Err(ModelError::Invalid(format!("duplicate component `{}`", c.name)));
            }
        }
        let mut participants = vec![Vec::new(); interactions.len()];
        for (i, c) in components.iter().enumerate() {
            for &a in &c.alphabet {
                let slot = participants
                    .get_mut(a.0)
                    .ok_or_else(|| ModelError::Reference(format!("component `{}` uses interaction #{}", c.name, a.0)))?;
                slot.push(i);
            }
        }
        if let Some(k) = participants.iter().position(|p| p.is_empty()) {
            return Err(ModelError::Invalid(format!("interaction `{}` is used by no component", interactions[k])));
        }
        if let Some(p) = priorities.iter().find(|p| p.low.0 >= interactions.len() || p.high.0 >= interactions.len()) {
            return Err(ModelError::Reference(format!("priority mentions unknown interaction #{}", p.low.0.max(p.high.0))));
        }
        let priorities = priorities.transitive_closure();
        if !priorities.is_irreflexive() {
            return Err(ModelError::Invalid("priorities are cyclic".into()));
        }
        Ok(System { components, interactions, participants, priorities })
    }

    pub fn num_interactions(&self) -> usize {
        self.interactions.len()
    }

    pub fn interactions(&self) -> impl Iterator<Item = Interaction> {
        (0..self.interactions.len()).map(Interaction)
    }

    pub fn interaction_name(&self, a: Interaction) -> &str {
        &self.interactions[a.0]
    }

    pub fn interaction_names(&self) -> &[String] {
        &self.interactions
    }

    pub fn interaction_index(&self, name: &str) -> Option<Interaction> {
        self.interactions.iter().position(|n| n == name).map(Interaction)
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    /// Components whose alphabet contains `a`, in index order.
    pub fn participants(&self, a: Interaction) -> &[usize] {
        &self.participants[a.0]
    }

    /// The closed priority set.
    pub fn priorities(&self) -> &PrioritySet {
        &self.priorities
    }

    /// Same components with `extra` added to the priorities. Fails if the
    /// closure of the union is not irreflexive.
    pub fn with_priorities(&self, extra: &PrioritySet) -> Result<System, ModelError> {
        let priorities = self.priorities.union(extra).transitive_closure();
        if !priorities.is_irreflexive() {
            return Err(ModelError::Invalid("priorities are cyclic".into()));
        }
        Ok(System { priorities, ..self.clone() })
    }

    pub fn priority_name(&self, p: Priority) -> (String, String) {
        (self.interaction_name(p.low).to_string(), self.interaction_name(p.high).to_string())
    }

    /// Controller projection: each priority `σ ≺ τ` is listed under every
    /// component whose alphabet contains `σ`. Components without entries
    /// map to an empty list ("unrestricted").
    pub fn project_controllers(&self, p: &PrioritySet) -> BTreeMap<usize, Vec<Priority>> {
        let mut table: BTreeMap<usize, Vec<Priority>> = (0..self.components.len()).map(|i| (i, Vec::new())).collect();
        for prio in p {
            for &i in self.participants(prio.low) {
                table.get_mut(&i).expect("component index").push(prio);
            }
        }
        table
    }
}

/// Risk configurations, as a predicate over locations and variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RiskSpec(pub Expr<RiskAtom>);

impl RiskSpec {
    pub fn none() -> Self {
        RiskSpec(Expr::Const(false))
    }
}

impl Default for RiskSpec {
    fn default() -> Self {
        Self::none()
    }
}

/// A parsed model document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub system: System,
    pub architecture: CommArchitecture,
    pub risk: RiskSpec,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loop_component(name: &str, labels: &[usize]) -> Component {
        let transitions = labels
            .iter()
            .map(|&l| Transition { source: 0, guard: Expr::tt(), label: Interaction(l), update: vec![], target: 0 })
            .collect();
        Component::new(name, vec!["l".into()], vec![], transitions, 0, vec![]).unwrap()
    }

    #[test]
    fn minimal_system() {
        let s = System::new(vec![loop_component("C", &[0])], vec!["a".into()], PrioritySet::new()).unwrap();
        assert_eq!(s.num_interactions(), 1);
        assert_eq!(s.participants(Interaction(0)), &[0]);
    }

    #[test]
    fn unused_interaction_is_rejected() {
        let err = System::new(vec![loop_component("C", &[0])], vec!["a".into(), "b".into()], PrioritySet::new());
        assert!(matches!(err, Err(ModelError::Invalid(_))));
    }

    #[test]
    fn cyclic_priorities_are_rejected() {
        let p: PrioritySet =
            [Priority::new(Interaction(0), Interaction(1)), Priority::new(Interaction(1), Interaction(0))].into_iter().collect();
        let err = System::new(vec![loop_component("C", &[0, 1])], vec!["a".into(), "b".into()], p);
        assert!(err.is_err());
    }

    #[test]
    fn projection_duplicates_by_membership() {
        let s = System::new(
            vec![loop_component("A", &[0, 1]), loop_component("B", &[0]), loop_component("C", &[1])],
            vec!["a".into(), "b".into()],
            PrioritySet::new(),
        )
        .unwrap();
        let p: PrioritySet = [Priority::new(Interaction(0), Interaction(1))].into_iter().collect();
        let table = s.project_controllers(&p);
        assert_eq!(table[&0].len(), 1);
        assert_eq!(table[&1].len(), 1);
        assert!(table[&2].is_empty());
        assert!(s.project_controllers(&PrioritySet::new()).values().all(Vec::is_empty));
    }

    #[test]
    fn value_sets() {
        assert_eq!(ValueSet::from_values(&[]), None);
        assert_eq!(ValueSet::from_values(&[true, false]), Some(ValueSet::ANY));
        assert_eq!(ValueSet::ANY.values().collect::<Vec<_>>(), vec![false, true]);
        assert!(!ValueSet::TRUE.allows(false));
    }
}
