use std::collections::BTreeSet;
use std::fmt;

use super::{Interaction, PrioritySet, System};

/// Ordered "informs" pairs `(informer, informee)` over component indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommArchitecture {
    pairs: BTreeSet<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    SelfTransmission,
    GroupTransmission,
    ExistingPriorityTransmission,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::SelfTransmission => "self-transmission",
            ViolationKind::GroupTransmission => "group transmission",
            ViolationKind::ExistingPriorityTransmission => "existing priority transmission",
        })
    }
}

/// A missing `(informer, informee)` pair required by a deployability
/// condition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub kind: ViolationKind,
    pub informer: usize,
    pub informee: usize,
}

impl CommArchitecture {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fully_connected(num_components: usize) -> Self {
        (0..num_components).flat_map(|i| (0..num_components).map(move |j| (i, j))).collect()
    }

    pub fn insert(&mut self, informer: usize, informee: usize) -> bool {
        self.pairs.insert((informer, informee))
    }

    pub fn informs(&self, informer: usize, informee: usize) -> bool {
        self.pairs.contains(&(informer, informee))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs required by self-, group- and existing-priority transmission.
    pub fn mandated(system: &System) -> CommArchitecture {
        let mut com = CommArchitecture::new();
        for v in required_pairs(system) {
            com.insert(v.informer, v.informee);
        }
        com
    }

    /// Adds every pair the deployability conditions require.
    pub fn with_mandated(mut self, system: &System) -> CommArchitecture {
        self.pairs.extend(Self::mandated(system).pairs);
        self
    }

    /// Checks the three deployability conditions and lists each missing
    /// pair once, under the first condition that requires it.
    pub fn deployability_violations(&self, system: &System) -> Vec<Violation> {
        let mut reported = BTreeSet::new();
        required_pairs(system)
            .into_iter()
            .filter(|v| !self.informs(v.informer, v.informee))
            .filter(|v| reported.insert((v.informer, v.informee)))
            .collect()
    }

    pub fn is_deployable(&self, system: &System) -> bool {
        self.deployability_violations(system).is_empty()
    }

    /// `true` iff every component executing `observed` informs every
    /// component executing `by`.
    pub fn visible(&self, system: &System, observed: Interaction, by: Interaction) -> bool {
        system
            .participants(observed)
            .iter()
            .all(|&i| system.participants(by).iter().all(|&j| self.informs(i, j)))
    }

    pub fn visibility_matrix(&self, system: &System) -> VisibilityMatrix {
        let n = system.num_interactions();
        let mut bits = vec![false; n * n];
        for tau in system.interactions() {
            for sigma in system.interactions() {
                bits[tau.0 * n + sigma.0] = self.visible(system, tau, sigma);
            }
        }
        VisibilityMatrix { n, bits }
    }

    /// Every `σ ≺ τ` in `p` has `τ` visible by `σ`.
    pub fn satisfies_arch_constraint(&self, system: &System, p: &PrioritySet) -> bool {
        p.iter().all(|prio| self.visible(system, prio.high, prio.low))
    }
}

fn required_pairs(system: &System) -> Vec<Violation> {
    let mut out = Vec::new();
    for i in 0..system.components.len() {
        out.push(Violation { kind: ViolationKind::SelfTransmission, informer: i, informee: i });
    }
    for a in system.interactions() {
        let ps = system.participants(a);
        for &i in ps {
            for &j in ps.iter().filter(|&&j| j != i) {
                out.push(Violation { kind: ViolationKind::GroupTransmission, informer: i, informee: j });
            }
        }
    }
    for prio in system.priorities() {
        for &i in system.participants(prio.high) {
            for &j in system.participants(prio.low) {
                out.push(Violation { kind: ViolationKind::ExistingPriorityTransmission, informer: i, informee: j });
            }
        }
    }
    out
}

impl FromIterator<(usize, usize)> for CommArchitecture {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        CommArchitecture { pairs: iter.into_iter().collect() }
    }
}

/// `Vis[τ][σ]`: whether `τ` is observable when deciding about `σ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisibilityMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl VisibilityMatrix {
    pub fn all(n: usize) -> Self {
        VisibilityMatrix { n, bits: vec![true; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn visible(&self, observed: Interaction, by: Interaction) -> bool {
        self.bits[observed.0 * self.n + by.0]
    }

    pub fn set(&mut self, observed: Interaction, by: Interaction, value: bool) {
        self.bits[observed.0 * self.n + by.0] = value;
    }

    pub fn allows(&self, p: crate::model::Priority) -> bool {
        self.visible(p.high, p.low)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Component, Expr, Priority, Transition};

    // C0 runs a, C1 runs b, both run s.
    fn two_components(priorities: PrioritySet) -> System {
        let lp = |l: usize| Transition { source: 0, guard: Expr::tt(), label: Interaction(l), update: vec![], target: 0 };
        System::new(
            vec![
                Component::new("C0", vec!["l".into()], vec![], vec![lp(0), lp(2)], 0, vec![]).unwrap(),
                Component::new("C1", vec!["l".into()], vec![], vec![lp(1), lp(2)], 0, vec![]).unwrap(),
            ],
            vec!["a".into(), "b".into(), "s".into()],
            priorities,
        )
        .unwrap()
    }

    #[test]
    fn missing_self_transmission() {
        let s = two_components(PrioritySet::new());
        let com: CommArchitecture = [(0, 1), (1, 0), (1, 1)].into_iter().collect();
        let v = com.deployability_violations(&s);
        assert_eq!(v, vec![Violation { kind: ViolationKind::SelfTransmission, informer: 0, informee: 0 }]);
    }

    #[test]
    fn missing_group_transmission() {
        let s = two_components(PrioritySet::new());
        let com: CommArchitecture = [(0, 0), (1, 0), (1, 1)].into_iter().collect();
        let v = com.deployability_violations(&s);
        assert_eq!(v[0].kind, ViolationKind::GroupTransmission);
        assert_eq!((v[0].informer, v[0].informee), (0, 1));
    }

    #[test]
    fn missing_priority_transmission() {
        // Drop the shared interaction so only the priority forces C0 -> C1.
        let lp = |l: usize| Transition { source: 0, guard: Expr::tt(), label: Interaction(l), update: vec![], target: 0 };
        let p: PrioritySet = [Priority::new(Interaction(1), Interaction(0))].into_iter().collect();
        let s = System::new(
            vec![
                Component::new("C0", vec!["l".into()], vec![], vec![lp(0)], 0, vec![]).unwrap(),
                Component::new("C1", vec!["l".into()], vec![], vec![lp(1)], 0, vec![]).unwrap(),
            ],
            vec!["a".into(), "b".into()],
            p,
        )
        .unwrap();
        let com: CommArchitecture = [(0, 0), (1, 1), (1, 0)].into_iter().collect();
        let v = com.deployability_violations(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::ExistingPriorityTransmission);
        assert_eq!((v[0].informer, v[0].informee), (0, 1));
        assert!(CommArchitecture::mandated(&s).is_deployable(&s));
    }

    #[test]
    fn fully_connected_is_deployable_and_all_visible() {
        let s = two_components(PrioritySet::new());
        let com = CommArchitecture::fully_connected(2);
        assert!(com.is_deployable(&s));
        let vis = com.visibility_matrix(&s);
        assert!(s.interactions().all(|t| s.interactions().all(|u| vis.visible(t, u))));
    }

    #[test]
    fn arch_constraint() {
        let s = two_components(PrioritySet::new());
        let b_below_a: PrioritySet = [Priority::new(Interaction(1), Interaction(0))].into_iter().collect();
        let mandated = CommArchitecture::mandated(&s);
        assert!(mandated.satisfies_arch_constraint(&s, &b_below_a));
        let only_self: CommArchitecture = [(0, 0), (1, 1)].into_iter().collect();
        assert!(!only_self.satisfies_arch_constraint(&s, &b_below_a));
        assert!(CommArchitecture::fully_connected(2).satisfies_arch_constraint(&s, &b_below_a));
    }

    #[test]
    fn deployable_diagonal() {
        let s = two_components(PrioritySet::new());
        let vis = CommArchitecture::mandated(&s).visibility_matrix(&s);
        assert!(s.interactions().all(|a| vis.visible(a, a)));
    }
}
