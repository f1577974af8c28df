//! Explicit oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use dps_core::explicit::{self, Configuration};
use dps_core::game::EnvNode;
use dps_core::model::{Interaction, RiskSpec, System, VisibilityMatrix};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    Control(Configuration),
    Env(EnvNode),
}

/// The product game explored node by node.
pub struct ExplicitGame {
    pub nodes: Vec<Node>,
    pub succ: Vec<Vec<usize>>,
    pub bad: Vec<bool>,
    /// For control nodes: chosen interaction and visible alternatives of
    /// each outgoing edge, aligned with `succ`.
    pub labels: Vec<Vec<(Interaction, BTreeSet<Interaction>)>>,
}

fn ge(s: &System, c: &Configuration) -> Vec<bool> {
    s.interactions().map(|a| explicit::guard_enabled(s, c, a)).collect()
}

/// Choices at `c`: `σ` with joint participation and no visible enabled
/// higher interaction, with the alternatives recorded for it.
pub fn choices(s: &System, vis: &VisibilityMatrix, c: &Configuration) -> Vec<(Interaction, BTreeSet<Interaction>)> {
    let g = ge(s, c);
    let p = s.priorities();
    let blocked_from = |x: Interaction, view: Interaction| p.above(x).any(|k| vis.visible(k, view) && g[k.0]);
    s.interactions()
        .filter(|&a| g[a.0] && !blocked_from(a, a))
        .map(|a| {
            let alt = s.interactions().filter(|&t| t != a && vis.visible(t, a) && g[t.0] && !blocked_from(t, a)).collect();
            (a, alt)
        })
        .collect()
}

impl ExplicitGame {
    pub fn build(s: &System, vis: &VisibilityMatrix, risk: &RiskSpec) -> ExplicitGame {
        let mut index: BTreeMap<Node, usize> = BTreeMap::new();
        let mut g = ExplicitGame { nodes: Vec::new(), succ: Vec::new(), bad: Vec::new(), labels: Vec::new() };
        let mut queue = VecDeque::new();
        let mut add = |n: Node, g: &mut ExplicitGame, q: &mut VecDeque<usize>| -> usize {
            if let Some(&k) = index.get(&n) {
                return k;
            }
            let k = g.nodes.len();
            index.insert(n.clone(), k);
            let bad = match &n {
                Node::Control(c) => explicit::deadlocked(s, c) || explicit::risk_holds(s, risk, c),
                Node::Env((c, _, _)) => explicit::risk_holds(s, risk, c),
            };
            g.nodes.push(n);
            g.succ.push(Vec::new());
            g.labels.push(Vec::new());
            g.bad.push(bad);
            q.push_back(k);
            k
        };
        add(Node::Control(Configuration::initial(s)), &mut g, &mut queue);
        while let Some(k) = queue.pop_front() {
            match g.nodes[k].clone() {
                Node::Control(c) => {
                    for (a, alt) in choices(s, vis, &c) {
                        let t = add(Node::Env((c.clone(), a, alt.clone())), &mut g, &mut queue);
                        g.succ[k].push(t);
                        g.labels[k].push((a, alt));
                    }
                }
                Node::Env((c, a, _)) => {
                    for next in explicit::successors_unchecked(s, &c, a) {
                        let t = add(Node::Control(next), &mut g, &mut queue);
                        if !g.succ[k].contains(&t) {
                            g.succ[k].push(t);
                        }
                    }
                }
            }
        }
        g
    }

    fn is_control(&self, k: usize) -> bool {
        matches!(self.nodes[k], Node::Control(_))
    }

    /// Classic attractor from `x`.
    pub fn attractor(&self, mut x: Vec<bool>) -> Vec<bool> {
        loop {
            let mut changed = false;
            for k in 0..self.nodes.len() {
                if x[k] || self.succ[k].is_empty() {
                    continue;
                }
                let add = if self.is_control(k) {
                    self.succ[k].iter().all(|&t| x[t])
                } else {
                    self.succ[k].iter().any(|&t| x[t])
                };
                if add {
                    x[k] = true;
                    changed = true;
                }
            }
            if !changed {
                return x;
            }
        }
    }

    /// Nested attractor by direct set iteration.
    pub fn nested_attractor(&self) -> Vec<bool> {
        let mut x = self.bad.clone();
        loop {
            x = self.attractor(x);
            let mut changed = false;
            for k in 0..self.nodes.len() {
                if x[k] || !self.is_control(k) {
                    continue;
                }
                if self.succ[k].iter().zip(&self.labels[k]).any(|(&t, (_, alt))| x[t] && alt.is_empty()) {
                    x[k] = true;
                    changed = true;
                }
            }
            if !changed {
                return x;
            }
        }
    }

    pub fn control_configs(&self, mask: &[bool]) -> BTreeSet<Configuration> {
        self.nodes
            .iter()
            .zip(mask)
            .filter_map(|(n, &m)| match n {
                Node::Control(c) if m => Some(c.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn env_nodes(&self, mask: &[bool]) -> BTreeSet<EnvNode> {
        self.nodes
            .iter()
            .zip(mask)
            .filter_map(|(n, &m)| match n {
                Node::Env(e) if m => Some(e.clone()),
                _ => None,
            })
            .collect()
    }
}
