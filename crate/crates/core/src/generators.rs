//! Benchmark families: dining philosophers, multicore bank allocation and
//! robots on a grid.

use std::str::FromStr;

use crate::model::{CommArchitecture, Component, Expr, Interaction, Model, PrioritySet, RiskAtom, RiskSpec, System, Transition, ValueSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhilosopherArch {
    /// Only the pairs every deployable architecture needs.
    None,
    /// Philosopher `i` informs philosopher `i - 1`.
    Clockwise,
    /// Philosopher `i` informs philosopher `i + 1`.
    CounterClockwise,
    Full,
}

impl FromStr for PhilosopherArch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "cw" | "clockwise" => Ok(Self::Clockwise),
            "ccw" | "counterclockwise" => Ok(Self::CounterClockwise),
            "full" => Ok(Self::Full),
            other => Err(format!("unknown philosopher architecture `{other}`")),
        }
    }
}

struct Builder {
    names: Vec<String>,
}

impl Builder {
    fn id(&mut self, name: String) -> Interaction {
        match self.names.iter().position(|n| *n == name) {
            Some(k) => Interaction(k),
            None => {
                self.names.push(name);
                Interaction(self.names.len() - 1)
            }
        }
    }
}

fn step(source: usize, label: Interaction, target: usize, nvars: usize) -> Transition {
    Transition { source, guard: Expr::tt(), label, update: vec![ValueSet::ANY; nvars], target }
}

/// `n` philosophers and `n` forks. Philosopher `i` takes fork `i` (left),
/// then fork `i + 1` (right), eats, and releases both at once.
pub fn philosophers(n: usize, arch: PhilosopherArch) -> Model {
    assert!(n >= 2, "at least two philosophers");
    let mut b = Builder { names: Vec::new() };
    let mut ids = Vec::new();
    for i in 0..n {
        ids.push((b.id(format!("takeL{i}")), b.id(format!("takeR{i}")), b.id(format!("rel{i}"))));
    }
    let mut comps = Vec::new();
    for (i, &(l, r, rel)) in ids.iter().enumerate() {
        comps.push(
            Component::new(
                format!("Phil{i}"),
                vec!["think".into(), "hasL".into(), "eat".into()],
                vec![],
                vec![step(0, l, 1, 0), step(1, r, 2, 0), step(2, rel, 0, 0)],
                0,
                vec![],
            )
            .expect("well-formed"),
        );
    }
    for j in 0..n {
        let prev = (j + n - 1) % n;
        let (l, _, rel) = ids[j];
        let (_, r_prev, rel_prev) = ids[prev];
        comps.push(
            Component::new(
                format!("Fork{j}"),
                vec!["free".into(), "taken".into()],
                vec![],
                vec![step(0, l, 1, 0), step(0, r_prev, 1, 0), step(1, rel, 0, 0), step(1, rel_prev, 0, 0)],
                0,
                vec![],
            )
            .expect("well-formed"),
        );
    }
    let system = System::new(comps, b.names, PrioritySet::new()).expect("well-formed");
    let mut com = CommArchitecture::mandated(&system);
    for i in 0..n {
        match arch {
            PhilosopherArch::None => {}
            PhilosopherArch::Clockwise => {
                com.insert(i, (i + n - 1) % n);
            }
            PhilosopherArch::CounterClockwise => {
                com.insert(i, (i + 1) % n);
            }
            PhilosopherArch::Full => {}
        }
    }
    if arch == PhilosopherArch::Full {
        com = CommArchitecture::fully_connected(2 * n);
    }
    Model { system, architecture: com, risk: RiskSpec::none() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MulticoreArch {
    /// The given CPU informs every component.
    Broadcast(usize),
    /// Only the mandated pairs.
    Local,
}

impl FromStr for MulticoreArch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "local" {
            return Ok(Self::Local);
        }
        let cpu = s.strip_prefix("broadcast-").ok_or_else(|| format!("unknown multicore architecture `{s}`"))?;
        let mut chars = cpu.chars();
        match (chars.next(), chars.next()) {
            (Some(c @ 'A'..='J'), None) => Ok(Self::Broadcast(c as usize - 'A' as usize)),
            _ => Err(format!("unknown CPU `{cpu}`")),
        }
    }
}

fn cpu_name(i: usize) -> String {
    char::from(b'A' + i as u8).to_string()
}

/// Banks a CPU may allocate, 0-based.
fn nearest_banks(cpu: usize, cpus: usize, banks: usize) -> Vec<usize> {
    if cpus == 4 && banks == 4 {
        return [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]][cpu].to_vec();
    }
    let mut v: Vec<usize> = (0..3).map(|k| (cpu + k) % banks).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// CPUs that each need two of their three nearest memory banks. An idle
/// CPU at `Start` toggles its `ready` flag nondeterministically; once ready
/// it allocates one bank, then a second, works, and releases both.
pub fn multicore(cpus: usize, banks: usize, arch: MulticoreArch) -> Model {
    assert!((2..=10).contains(&cpus) && banks >= 3, "2 to 10 CPUs, at least 3 banks");
    let mut b = Builder { names: Vec::new() };
    let near: Vec<Vec<usize>> = (0..cpus).map(|c| nearest_banks(c, cpus, banks)).collect();
    // Per CPU: allocation per nearest bank, idle, proc, rel.
    let mut alloc = Vec::new();
    let mut idle = Vec::new();
    let mut proc_ = Vec::new();
    let mut rel = Vec::new();
    for (c, nb) in near.iter().enumerate() {
        let x = cpu_name(c);
        alloc.push(nb.iter().map(|&k| b.id(format!("{x}{}", k + 1))).collect::<Vec<_>>());
        idle.push(b.id(format!("idle{x}")));
        proc_.push(b.id(format!("proc{x}")));
        rel.push(b.id(format!("rel{x}")));
    }
    let mut comps = Vec::new();
    for (c, nb) in near.iter().enumerate() {
        // Start, one location per held bank, Work, Done.
        let mut locs = vec!["Start".to_string()];
        locs.extend(nb.iter().map(|k| format!("M{}", k + 1)));
        let work = locs.len();
        locs.push("Work".into());
        locs.push("Done".into());
        let done = work + 1;
        let ready = Expr::Atom(0);
        let mut ts = vec![Transition { source: 0, guard: Expr::not(ready.clone()), label: idle[c], update: vec![ValueSet::ANY], target: 0 }];
        for (j, &a) in alloc[c].iter().enumerate() {
            ts.push(Transition { source: 0, guard: ready.clone(), label: a, update: vec![ValueSet::exact(true)], target: 1 + j });
            for held in (0..nb.len()).filter(|&h| h != j) {
                ts.push(Transition { source: 1 + held, guard: Expr::tt(), label: a, update: vec![ValueSet::exact(true)], target: work });
            }
        }
        ts.push(Transition { source: work, guard: Expr::tt(), label: proc_[c], update: vec![ValueSet::ANY], target: done });
        ts.push(Transition { source: done, guard: Expr::tt(), label: rel[c], update: vec![ValueSet::exact(false)], target: 0 });
        comps.push(Component::new(cpu_name(c), locs, vec!["ready".into()], ts, 0, vec![false]).expect("well-formed"));
    }
    for k in 0..banks {
        let users: Vec<usize> = (0..cpus).filter(|&c| near[c].contains(&k)).collect();
        let mut locs = vec!["free".to_string()];
        locs.extend(users.iter().map(|&c| format!("taken{}", cpu_name(c))));
        let mut ts = Vec::new();
        for (u, &c) in users.iter().enumerate() {
            let j = near[c].iter().position(|&x| x == k).expect("nearest bank");
            ts.push(step(0, alloc[c][j], 1 + u, 0));
            for loc in 0..locs.len() {
                let target = if loc == 1 + u { 0 } else { loc };
                ts.push(step(loc, rel[c], target, 0));
            }
        }
        if ts.is_empty() {
            continue;
        }
        comps.push(Component::new(format!("M{}", k + 1), locs, vec![], ts, 0, vec![]).expect("well-formed"));
    }
    let system = System::new(comps, b.names, PrioritySet::new()).expect("well-formed");
    let mut com = CommArchitecture::mandated(&system);
    if let MulticoreArch::Broadcast(x) = arch {
        for j in 0..system.components.len() {
            com.insert(x, j);
        }
    }
    Model { system, architecture: com, risk: RiskSpec::none() }
}

/// Robots on a grid of `cells` (3 rows), each moving in four directions.
/// Risk: every robot in the same cell. Robot `i` informs robot `i + 1`.
pub fn robots(n: usize, cells: usize) -> Model {
    assert!(n >= 2 && cells >= n && cells.is_multiple_of(3), "n >= 2, cells >= n, cells a multiple of 3");
    let rows = 3;
    let cols = cells / rows;
    let mut b = Builder { names: Vec::new() };
    let dirs: [(&str, isize, isize); 4] = [("N", -1, 0), ("E", 0, 1), ("S", 1, 0), ("W", 0, -1)];
    let mut comps = Vec::new();
    for i in 0..n {
        let locs: Vec<String> = (0..cells).map(|c| format!("c{c}")).collect();
        let mut ts = Vec::new();
        for &(d, dr, dc) in &dirs {
            let a = b.id(format!("R{i}{d}"));
            for c in 0..cells {
                let (r, col) = ((c / cols) as isize, (c % cols) as isize);
                let (nr, nc) = (r + dr, col + dc);
                if (0..rows as isize).contains(&nr) && (0..cols as isize).contains(&nc) {
                    ts.push(step(c, a, nr as usize * cols + nc as usize, 0));
                }
            }
        }
        let start = i * (cells / n);
        comps.push(Component::new(format!("R{i}"), locs, vec![], ts, start, vec![]).expect("well-formed"));
    }
    let system = System::new(comps, b.names, PrioritySet::new()).expect("well-formed");
    let mut com = CommArchitecture::mandated(&system);
    for i in 0..n {
        com.insert(i, (i + 1) % n);
    }
    let risk = RiskSpec(Expr::Or(
        (0..cells)
            .map(|c| Expr::And((0..n).map(|i| Expr::Atom(RiskAtom::At { component: i, location: c })).collect()))
            .collect(),
    ));
    Model { system, architecture: com, risk }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn philosopher_counts() {
        for (n, comps, inters) in [(10, 20, 30), (20, 40, 60)] {
            let m = philosophers(n, PhilosopherArch::CounterClockwise);
            assert_eq!(m.system.components.len(), comps);
            assert_eq!(m.system.num_interactions(), inters);
            assert!(m.architecture.is_deployable(&m.system));
        }
        for arch in [PhilosopherArch::None, PhilosopherArch::Clockwise, PhilosopherArch::Full] {
            let m = philosophers(3, arch);
            assert!(m.architecture.is_deployable(&m.system));
        }
    }

    #[test]
    fn multicore_counts() {
        for (cpus, comps, inters) in [(4, 8, 24), (8, 16, 48)] {
            let m = multicore(cpus, cpus, MulticoreArch::Broadcast(0));
            assert_eq!(m.system.components.len(), comps);
            assert_eq!(m.system.num_interactions(), inters);
            assert!(m.architecture.is_deployable(&m.system));
        }
        assert_eq!("broadcast-B".parse::<MulticoreArch>(), Ok(MulticoreArch::Broadcast(1)));
    }

    #[test]
    fn robot_counts() {
        for (n, inters) in [(4, 16), (6, 24)] {
            let m = robots(n, 12);
            assert_eq!(m.system.components.len(), n);
            assert_eq!(m.system.num_interactions(), inters);
            assert!(m.architecture.is_deployable(&m.system));
        }
    }
}
