use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Dense index of an interaction in the system alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interaction(pub usize);

impl Interaction {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A priority `low ≺ high`: `low` is disabled whenever `high` has joint
/// participation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Priority {
    pub low: Interaction,
    pub high: Interaction,
}

impl Priority {
    pub fn new(low: Interaction, high: Interaction) -> Self {
        Priority { low, high }
    }

    pub fn is_reflexive(self) -> bool {
        self.low == self.high
    }

    pub fn reversed(self) -> Self {
        Priority { low: self.high, high: self.low }
    }
}

/// Set of priorities, ordered by `(low, high)` index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PrioritySet {
    pairs: BTreeSet<Priority>,
}

impl PrioritySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, p: Priority) -> bool {
        self.pairs.insert(p)
    }

    pub fn remove(&mut self, p: &Priority) -> bool {
        self.pairs.remove(p)
    }

    pub fn contains(&self, p: &Priority) -> bool {
        self.pairs.contains(p)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Priority> + '_ {
        self.pairs.iter().copied()
    }

    pub fn union(&self, other: &PrioritySet) -> PrioritySet {
        let mut out = self.clone();
        out.pairs.extend(other.iter());
        out
    }

    pub fn is_subset(&self, other: &PrioritySet) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    /// Interactions that occur on either side of some priority.
    pub fn interactions(&self) -> BTreeSet<Interaction> {
        self.iter().flat_map(|p| [p.low, p.high]).collect()
    }

    /// Smallest transitive superset. Reflexive pairs are kept so that
    /// cycles show up in [`PrioritySet::is_irreflexive`].
    pub fn transitive_closure(&self) -> PrioritySet {
        let mut closed = self.pairs.clone();
        loop {
            let before = closed.len();
            let snapshot: Vec<Priority> = closed.iter().copied().collect();
            for a in &snapshot {
                for b in snapshot.iter().filter(|b| b.low == a.high) {
                    closed.insert(Priority::new(a.low, b.high));
                }
            }
            if closed.len() == before {
                break;
            }
        }
        PrioritySet { pairs: closed }
    }

    pub fn is_irreflexive(&self) -> bool {
        self.iter().all(|p| !p.is_reflexive())
    }

    pub fn is_transitive(&self) -> bool {
        self.iter().all(|a| {
            self.iter()
                .filter(|b| b.low == a.high)
                .all(|b| self.contains(&Priority::new(a.low, b.high)))
        })
    }

    /// Every `high` that dominates `low`.
    pub fn above(&self, low: Interaction) -> impl Iterator<Item = Interaction> + '_ {
        self.pairs
            .range(Priority::new(low, Interaction(0))..=Priority::new(low, Interaction(usize::MAX)))
            .map(|p| p.high)
    }
}

impl FromIterator<Priority> for PrioritySet {
    fn from_iter<T: IntoIterator<Item = Priority>>(iter: T) -> Self {
        PrioritySet { pairs: iter.into_iter().collect() }
    }
}

impl Extend<Priority> for PrioritySet {
    fn extend<T: IntoIterator<Item = Priority>>(&mut self, iter: T) {
        self.pairs.extend(iter)
    }
}

impl<'a> IntoIterator for &'a PrioritySet {
    type Item = Priority;
    type IntoIter = std::iter::Copied<std::collections::btree_set::Iter<'a, Priority>>;

    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter().copied()
    }
}
