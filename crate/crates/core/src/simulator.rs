//! Symbolic world simulation: effect application, plan execution, goal
//! checks and exploration against a hidden ground-truth world.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::to_dnf;
use crate::model::{instantiate_scene, merge_observation, Memory, ModelError, Oam, ObjectInstance};
use crate::pddl::{Atom, Formula, EQUALITY};
use crate::planner::{GroundAction, Plan, State};

const AT: &str = "at";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("cannot execute '{action}': precondition {literal} does not hold")]
    PreconditionViolation { action: String, literal: String },
    #[error("unknown location '{0}'")]
    UnknownLocation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Closed-world truth of a ground atom; `=` is built in.
pub fn holds(state: &State, atom: &Atom) -> bool {
    if atom.predicate == EQUALITY && atom.args.len() == 2 {
        return atom.args[0] == atom.args[1];
    }
    state.contains(atom)
}

pub fn apply_action(state: &State, action: &GroundAction) -> Result<State, SimError> {
    if let Some(lit) = action.precondition.first_violation(&|a| holds(state, a)) {
        return Err(SimError::PreconditionViolation {
            action: action.to_string(),
            literal: lit.to_string(),
        });
    }
    let mut next = state.clone();
    for d in &action.del {
        next.remove(d);
    }
    for a in &action.add {
        next.insert(a.clone());
    }
    Ok(next)
}

/// True iff some DNF conjunct holds: positive literals ⊆ state and negative
/// literals disjoint from it.
pub fn goal_satisfied(state: &State, goal: &Formula) -> bool {
    match to_dnf(goal) {
        Ok(d) => d.satisfied_by(&|a| holds(state, a)),
        // too large to normalize; direct evaluation is equivalent
        Err(_) => goal.eval(&|a| holds(state, a)),
    }
}

/// Planning state implied by memory: relations plus agent positions.
pub fn state_of(memory: &Memory) -> State {
    let mut s = memory.relations.clone();
    for (agent, loc) in &memory.agent_locations {
        s.insert(Atom::new(AT, [agent.as_str(), loc.as_str()]));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: GroundAction,
    pub before: State,
    pub after: State,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    pub final_state: State,
}

pub fn replay(init: &State, plan: &Plan) -> Result<ExecutionTrace, SimError> {
    let mut trace = ExecutionTrace {
        steps: Vec::new(),
        final_state: init.clone(),
    };
    for step in &plan.steps {
        let after = apply_action(&trace.final_state, step)?;
        trace.steps.push(TraceStep {
            action: step.clone(),
            before: std::mem::replace(&mut trace.final_state, after.clone()),
            after,
        });
    }
    Ok(trace)
}

/// Executes every step, assuming success, and writes the final state back.
pub fn execute_plan(memory: &Memory, plan: &Plan) -> Result<(Memory, ExecutionTrace), SimError> {
    let trace = replay(&state_of(memory), plan)?;
    let mut out = memory.clone();
    out.relations.clear();
    out.agent_locations.clear();
    for atom in &trace.final_state {
        if atom.predicate == AT && atom.args.len() == 2 {
            out.agent_locations.insert(atom.args[0].clone(), atom.args[1].clone());
        } else {
            out.relations.insert(atom.clone());
        }
    }
    out.last_plan = Some(plan.clone());
    Ok((out, trace))
}

/// Hidden ground truth that exploration reveals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct World {
    pub placement: BTreeMap<String, Vec<ObjectInstance>>,
    pub relations: BTreeSet<Atom>,
    pub agent_starts: BTreeMap<String, String>,
    pub oam: Oam,
}

impl World {
    pub fn instances(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.placement.values().flatten()
    }

    pub fn location_of(&self, instance: &str) -> Option<&str> {
        self.placement
            .iter()
            .find(|(_, v)| v.iter().any(|i| i.name() == instance))
            .map(|(l, _)| l.as_str())
    }
}

/// Moves `agent` to `location`, marks it explored and merges what is there.
/// Only ground-truth relations touching newly seen objects and mentioning
/// nothing unknown are revealed.
pub fn explore(memory: &Memory, location: &str, world: &World, agent: &str) -> Result<Memory, SimError> {
    if memory.location(location).is_none() {
        return Err(SimError::UnknownLocation(location.to_string()));
    }
    let mut out = memory.clone();
    out.agent_locations.insert(agent.to_string(), location.to_string());
    if let Some(l) = out.location_mut(location) {
        l.explored = true;
    }
    let seen = world.placement.get(location).cloned().unwrap_or_default();
    let observed = instantiate_scene(&seen, &world.oam)?;
    let before = memory.scene.instance_names();
    out.scene = merge_observation(&out.scene, observed.pairs)?;
    let fresh: BTreeSet<String> = seen
        .iter()
        .map(ObjectInstance::name)
        .filter(|n| !before.contains(n))
        .collect();
    let known = out.known_entities();
    for r in &world.relations {
        if r.args.iter().any(|a| fresh.contains(a)) && r.args.iter().all(|a| known.contains(a)) {
            out.relations.insert(r.clone());
        }
    }
    Ok(out)
}
