//! JSON model documents.
//!
//! ```json
//! { "components": [ { "name": "P0", "locations": ["think", "eat"], "variables": ["hungry"],
//!                     "initialLocation": "think", "initialValuation": { "hungry": false },
//!                     "transitions": [ { "from": "think", "to": "eat", "label": "go",
//!                                        "guard": "hungry", "update": { "hungry": [false] } } ] } ],
//!   "priorities": [["low", "high"]],
//!   "architecture": [["P0", "P0"]],
//!   "risk": ["and", "P0@eat", "P0.hungry"] }
//! ```
//!
//! Expressions are `true | false | atom | ["not", e] | ["and", e, ...] | ["or", e, ...]`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    CommArchitecture, Component, Expr, Interaction, Model, ModelError, Priority, PrioritySet, RiskAtom, RiskSpec,
    System, Transition, ValueSet,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelDocument {
    /// Optional interaction order; otherwise order of first use.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<String>,
    pub components: Vec<ComponentDoc>,
    #[serde(default)]
    pub priorities: Vec<(String, String)>,
    #[serde(default)]
    pub architecture: Vec<(String, String)>,
    #[serde(default = "false_value")]
    pub risk: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ComponentDoc {
    pub name: String,
    pub locations: Vec<String>,
    #[serde(default)]
    pub variables: Vec<String>,
    #[serde(default)]
    pub initial_location: Option<String>,
    #[serde(default)]
    pub initial_valuation: BTreeMap<String, bool>,
    /// Optional explicit alphabet; every entry must label some transition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<String>>,
    pub transitions: Vec<TransitionDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    pub from: String,
    pub to: String,
    pub label: String,
    #[serde(default = "true_value")]
    pub guard: Value,
    #[serde(default)]
    pub update: BTreeMap<String, Vec<bool>>,
}

fn false_value() -> Value {
    Value::Bool(false)
}

fn true_value() -> Value {
    Value::Bool(true)
}

/// Parses and validates a model document.
pub fn parse_system(text: &str) -> Result<Model, ModelError> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Model::from_document(&doc)
}

fn parse_expr<A>(v: &Value, atom: &mut impl FnMut(&str) -> Result<A, ModelError>) -> Result<Expr<A>, ModelError> {
    match v {
        Value::Bool(b) => Ok(Expr::Const(*b)),
        Value::String(s) => Ok(Expr::Atom(atom(s)?)),
        Value::Array(items) => {
            let (op, args) = items
                .split_first()
                .ok_or_else(|| ModelError::Invalid("empty expression array".into()))?;
            let args: Vec<Expr<A>> = args.iter().map(|a| parse_expr(a, atom)).collect::<Result<_, _>>()?;
            match op.as_str() {
                Some("not") if args.len() == 1 => Ok(Expr::not(args.into_iter().next().unwrap())),
                Some("and") => Ok(Expr::And(args)),
                Some("or") => Ok(Expr::Or(args)),
                _ => Err(ModelError::Invalid(format!("malformed expression {v}"))),
            }
        }
        _ => Err(ModelError::Invalid(format!("malformed expression {v}"))),
    }
}

fn emit_expr<A>(e: &Expr<A>, atom: &impl Fn(&A) -> String) -> Value {
    match e {
        Expr::Const(b) => Value::Bool(*b),
        Expr::Atom(a) => Value::String(atom(a)),
        Expr::Not(x) => Value::Array(vec!["not".into(), emit_expr(x, atom)]),
        Expr::And(xs) | Expr::Or(xs) => {
            let op = if matches!(e, Expr::And(_)) { "and" } else { "or" };
            let mut items = vec![Value::String(op.into())];
            items.extend(xs.iter().map(|x| emit_expr(x, atom)));
            Value::Array(items)
        }
    }
}

impl Model {
    pub fn from_document(doc: &ModelDocument) -> Result<Model, ModelError> {
        let mut interactions: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for name in &doc.interactions {
            if index.insert(name.clone(), interactions.len()).is_some() {
                return Err(ModelError::Reference(format!("interaction `{name}` listed twice")));
            }
            interactions.push(name.clone());
        }
        for c in &doc.components {
            for t in &c.transitions {
                if !index.contains_key(&t.label) {
                    index.insert(t.label.clone(), interactions.len());
                    interactions.push(t.label.clone());
                }
            }
        }

        let mut components = Vec::with_capacity(doc.components.len());
        for c in &doc.components {
            components.push(component_from_doc(c, &index)?);
        }

        let mut priorities = PrioritySet::new();
        for (low, high) in &doc.priorities {
            let find = |n: &String| {
                index
                    .get(n)
                    .map(|&k| Interaction(k))
                    .ok_or_else(|| ModelError::Reference(format!("priority mentions unknown interaction `{n}`")))
            };
            priorities.insert(Priority::new(find(low)?, find(high)?));
        }
        let system = System::new(components, interactions, priorities)?;

        let mut architecture = CommArchitecture::new();
        for (from, to) in &doc.architecture {
            let find = |n: &String| {
                system
                    .component_index(n)
                    .ok_or_else(|| ModelError::Reference(format!("architecture mentions unknown component `{n}`")))
            };
            architecture.insert(find(from)?, find(to)?);
        }

        let risk = RiskSpec(parse_expr(&doc.risk, &mut |s| parse_risk_atom(&system, s))?);
        Ok(Model { system, architecture, risk })
    }

    pub fn to_document(&self) -> ModelDocument {
        let s = &self.system;
        let components = s
            .components
            .iter()
            .map(|c| ComponentDoc {
                name: c.name.clone(),
                locations: c.locations.clone(),
                variables: c.variables.clone(),
                initial_location: Some(c.locations[c.initial_location].clone()),
                initial_valuation: c.variables.iter().cloned().zip(c.initial_valuation.iter().copied()).collect(),
                alphabet: None,
                transitions: c
                    .transitions
                    .iter()
                    .map(|t| TransitionDoc {
                        from: c.locations[t.source].clone(),
                        to: c.locations[t.target].clone(),
                        label: s.interaction_name(t.label).to_string(),
                        guard: emit_expr(&t.guard, &|&v: &usize| c.variables[v].clone()),
                        update: c
                            .variables
                            .iter()
                            .zip(&t.update)
                            .map(|(v, set)| (v.clone(), set.values().collect()))
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        ModelDocument {
            interactions: s.interaction_names().to_vec(),
            components,
            priorities: s.priorities().iter().map(|p| s.priority_name(p)).collect(),
            architecture: self
                .architecture
                .pairs()
                .map(|(i, j)| (s.components[i].name.clone(), s.components[j].name.clone()))
                .collect(),
            risk: emit_expr(&self.risk.0, &|a: &RiskAtom| risk_atom_name(s, a)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model documents always serialize")
    }
}

pub(crate) fn risk_atom_name(s: &System, a: &RiskAtom) -> String {
    match *a {
        RiskAtom::At { component, location } => {
            let c = &s.components[component];
            format!("{}@{}", c.name, c.locations[location])
        }
        RiskAtom::Var { component, variable } => {
            let c = &s.components[component];
            format!("{}.{}", c.name, c.variables[variable])
        }
    }
}

fn parse_risk_atom(system: &System, atom: &str) -> Result<RiskAtom, ModelError> {
    let unknown = || ModelError::Reference(format!("unknown risk atom `{atom}`"));
    if let Some((comp, loc)) = atom.split_once('@') {
        let component = system.component_index(comp).ok_or_else(unknown)?;
        let location = system.components[component].location_index(loc).ok_or_else(unknown)?;
        return Ok(RiskAtom::At { component, location });
    }
    if let Some((comp, var)) = atom.rsplit_once('.') {
        let component = system.component_index(comp).ok_or_else(unknown)?;
        let variable = system.components[component].variable_index(var).ok_or_else(unknown)?;
        return Ok(RiskAtom::Var { component, variable });
    }
    Err(unknown())
}

fn component_from_doc(c: &ComponentDoc, index: &HashMap<String, usize>) -> Result<Component, ModelError> {
    let loc = |n: &str| {
        c.locations
            .iter()
            .position(|l| l == n)
            .ok_or_else(|| ModelError::Reference(format!("component `{}` has no location `{n}`", c.name)))
    };
    let var = |n: &str| {
        c.variables
            .iter()
            .position(|v| v == n)
            .ok_or_else(|| ModelError::Reference(format!("component `{}` has no variable `{n}`", c.name)))
    };

    let initial = c
        .initial_location
        .as_deref()
        .ok_or_else(|| ModelError::Reference(format!("component `{}` has no initialLocation", c.name)))?;
    let initial_location = loc(initial)?;

    for name in c.initial_valuation.keys() {
        var(name)?;
    }
    let initial_valuation = c
        .variables
        .iter()
        .map(|v| {
            c.initial_valuation
                .get(v)
                .copied()
                .ok_or_else(|| ModelError::Invalid(format!("initialValuation of `{}` misses `{v}`", c.name)))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut transitions = Vec::with_capacity(c.transitions.len());
    for t in &c.transitions {
        for name in t.update.keys() {
            var(name)?;
        }
        let update = c
            .variables
            .iter()
            .map(|v| {
                let values = t
                    .update
                    .get(v)
                    .ok_or_else(|| ModelError::Invalid(format!("update of `{}` misses variable `{v}`", c.name)))?;
                ValueSet::from_values(values)
                    .ok_or_else(|| ModelError::EmptyUpdate { component: c.name.clone(), variable: v.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        transitions.push(Transition {
            source: loc(&t.from)?,
            guard: parse_expr(&t.guard, &mut |s| var(s))?,
            label: Interaction(index[&t.label]),
            update,
            target: loc(&t.to)?,
        });
    }

    if let Some(alphabet) = &c.alphabet {
        for name in alphabet {
            if !c.transitions.iter().any(|t| &t.label == name) {
                return Err(ModelError::Invalid(format!(
                    "interaction `{name}` is in the alphabet of `{}` but labels none of its transitions",
                    c.name
                )));
            }
        }
    }

    Component::new(c.name.clone(), c.locations.clone(), c.variables.clone(), transitions, initial_location, initial_valuation)
}
