use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::domain::Domain;
use super::formula::Atom;
use super::types::{capability_type, HAND, LOCATION};
use super::PddlError;
use crate::model::{AgentProfile, Memory};

pub const AT: &str = "at";

/// A problem without its goal: typed objects and the initial state.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSkeleton {
    pub objects: BTreeMap<String, BTreeSet<String>>,
    pub init: BTreeSet<Atom>,
    pub costs: BTreeMap<String, u64>,
    /// Per-agent hand preference, used as a tie-break when grounding.
    pub hand_order: BTreeMap<String, Vec<String>>,
}

impl ProblemSkeleton {
    pub fn types_of(&self, entity: &str) -> Option<&BTreeSet<String>> {
        self.objects.get(entity)
    }

    fn declare(&mut self, entity: &str, ty: &str) {
        self.objects
            .entry(entity.to_string())
            .or_default()
            .insert(ty.to_string());
    }

    /// Checks predicate existence, arity, entity existence and argument types.
    pub fn check_atom(&self, domain: &Domain, atom: &Atom) -> Result<(), PddlError> {
        let decl = domain
            .predicate(&atom.predicate)
            .ok_or_else(|| PddlError::UnknownPredicate {
                context: "initial state".into(),
                name: atom.predicate.clone(),
            })?;
        if decl.arity() != atom.args.len() {
            return Err(PddlError::Invalid(format!(
                "{}: expected {} arguments, got {}",
                atom,
                decl.arity(),
                atom.args.len()
            )));
        }
        for (arg, want) in atom.args.iter().zip(decl.param_types()) {
            let types = self
                .types_of(arg)
                .ok_or_else(|| PddlError::UnknownEntity(arg.clone()))?;
            if !domain.types.satisfies(types, want) {
                return Err(PddlError::Invalid(format!(
                    "{atom}: '{arg}' is not of type {want}"
                )));
            }
        }
        Ok(())
    }
}

/// Objects come from the scene, the locations and the agents; the initial
/// state is the memory's relations plus the agents' current positions.
pub fn build_problem_init(
    domain: &Domain,
    memory: &Memory,
    agents: &[AgentProfile],
) -> Result<ProblemSkeleton, PddlError> {
    let mut sk = ProblemSkeleton::default();
    for pair in &memory.scene.pairs {
        sk.declare(&pair.instance.name(), &pair.affordance);
    }
    for loc in &memory.locations {
        sk.declare(&loc.name, LOCATION);
    }
    for agent in agents {
        sk.declare(&agent.name, agent.kind.as_str());
        for cap in &agent.capabilities {
            sk.declare(&agent.name, &capability_type(cap));
        }
        for hand in &agent.hands {
            sk.declare(hand, HAND);
        }
        sk.costs.insert(agent.name.clone(), agent.cost);
        sk.hand_order.insert(agent.name.clone(), agent.hands.clone());
    }
    for (name, types) in &sk.objects {
        for t in types {
            if !domain.types.contains(t) {
                return Err(PddlError::Invalid(format!(
                    "entity '{name}' has type '{t}' missing from the domain"
                )));
            }
        }
    }

    for rel in &memory.relations {
        sk.check_atom(domain, rel)?;
        sk.init.insert(rel.clone());
    }
    for agent in agents {
        if let Some(loc) = memory.agent_locations.get(&agent.name) {
            let at = Atom::new(AT, [agent.name.as_str(), loc.as_str()]);
            sk.check_atom(domain, &at)?;
            sk.init.insert(at);
        }
    }
    for name in memory.agent_locations.keys() {
        if !agents.iter().any(|a| &a.name == name) {
            return Err(PddlError::UnknownEntity(name.clone()));
        }
    }
    Ok(sk)
}
