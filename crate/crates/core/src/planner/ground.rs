use std::collections::BTreeMap;

use super::{GroundAction, PlannerError};
use crate::pddl::{ActionSchema, Atom, Domain, Formula, ProblemSkeleton, TypedParam, EQUALITY, HAND};

pub const DEFAULT_GROUNDING_LIMIT: usize = 2_000_000;

pub fn ground_actions(domain: &Domain, sk: &ProblemSkeleton) -> Result<Vec<GroundAction>, PlannerError> {
    ground_actions_with_limit(domain, sk, DEFAULT_GROUNDING_LIMIT)
}

/// Every type-consistent assignment, in schema order then parameter order.
/// Hand parameters follow the acting agent's hand preference; other
/// parameters are enumerated by name. Assignments whose precondition is
/// statically false through `=` are dropped.
pub fn ground_actions_with_limit(
    domain: &Domain,
    sk: &ProblemSkeleton,
    limit: usize,
) -> Result<Vec<GroundAction>, PlannerError> {
    let mut out = Vec::new();
    for schema in &domain.actions {
        let agent_var = schema.cost_of.clone().or_else(|| schema.params.first().map(|p| p.name.clone()));
        let mut binding: Vec<String> = Vec::with_capacity(schema.params.len());
        enumerate(domain, sk, schema, agent_var.as_deref(), &mut binding, &mut out, limit)?;
    }
    Ok(out)
}

fn candidates(
    domain: &Domain,
    sk: &ProblemSkeleton,
    param: &TypedParam,
    agent: Option<&str>,
) -> Vec<String> {
    let fits = |e: &str| {
        sk.types_of(e)
            .map(|ts| domain.types.satisfies(ts, &param.ty))
            .unwrap_or(false)
    };
    if param.ty == HAND {
        if let Some(order) = agent.and_then(|a| sk.hand_order.get(a)) {
            return order.iter().filter(|h| fits(h)).cloned().collect();
        }
    }
    sk.objects.keys().filter(|e| fits(e)).cloned().collect()
}

fn enumerate(
    domain: &Domain,
    sk: &ProblemSkeleton,
    schema: &ActionSchema,
    agent_var: Option<&str>,
    binding: &mut Vec<String>,
    out: &mut Vec<GroundAction>,
    limit: usize,
) -> Result<(), PlannerError> {
    let i = binding.len();
    if i == schema.params.len() {
        if let Some(a) = instantiate(schema, agent_var, binding, sk)? {
            if out.len() >= limit {
                return Err(PlannerError::GroundingLimit { limit });
            }
            out.push(a);
        }
        return Ok(());
    }
    let agent = agent_var.and_then(|v| {
        schema
            .params
            .iter()
            .position(|p| p.name == v)
            .filter(|&j| j < i)
            .map(|j| binding[j].as_str())
    });
    for c in candidates(domain, sk, &schema.params[i], agent) {
        binding.push(c);
        enumerate(domain, sk, schema, agent_var, binding, out, limit)?;
        binding.pop();
    }
    Ok(())
}

fn instantiate(
    schema: &ActionSchema,
    agent_var: Option<&str>,
    binding: &[String],
    sk: &ProblemSkeleton,
) -> Result<Option<GroundAction>, PlannerError> {
    let map: BTreeMap<&str, &str> = schema
        .params
        .iter()
        .map(|p| p.name.as_str())
        .zip(binding.iter().map(String::as_str))
        .collect();
    let sub = |name: &str| map.get(name).map(|v| v.to_string());
    let precondition = simplify(&schema.precondition.map_atoms(&mut |a| {
        let g = a.substitute(&sub);
        if g.predicate == EQUALITY && g.args.len() == 2 {
            if g.args[0] == g.args[1] {
                Formula::truth()
            } else {
                Formula::Or(Vec::new())
            }
        } else {
            Formula::Atom(g)
        }
    }));
    if is_false(&precondition) {
        return Ok(None);
    }
    let agent = agent_var
        .and_then(|v| map.get(v))
        .map(|s| s.to_string())
        .unwrap_or_default();
    let cost = if schema.cost_of.is_some() {
        *sk.costs
            .get(&agent)
            .ok_or_else(|| PlannerError::Invalid(format!("no cost assigned to agent '{agent}'")))?
    } else {
        1
    };
    Ok(Some(GroundAction {
        name: schema.name.clone(),
        agent,
        args: binding.to_vec(),
        precondition,
        add: schema.add.iter().map(|a| a.substitute(&sub)).collect(),
        del: schema.del.iter().map(|a| a.substitute(&sub)).collect(),
        cost,
    }))
}

fn is_true(f: &Formula) -> bool {
    matches!(f, Formula::And(cs) if cs.is_empty())
}

fn is_false(f: &Formula) -> bool {
    matches!(f, Formula::Or(cs) if cs.is_empty())
}

/// Constant folding with `(and)` as true and `(or)` as false.
pub(crate) fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) => f.clone(),
        Formula::Not(c) => {
            let c = simplify(c);
            if is_true(&c) {
                Formula::Or(Vec::new())
            } else if is_false(&c) {
                Formula::truth()
            } else {
                Formula::not(c)
            }
        }
        Formula::And(cs) => {
            let mut kept = Vec::new();
            for c in cs.iter().map(simplify) {
                if is_false(&c) {
                    return Formula::Or(Vec::new());
                }
                if !is_true(&c) {
                    kept.push(c);
                }
            }
            if kept.len() == 1 {
                kept.pop().expect("one element")
            } else {
                Formula::And(kept)
            }
        }
        Formula::Or(cs) => {
            let mut kept = Vec::new();
            for c in cs.iter().map(simplify) {
                if is_true(&c) {
                    return Formula::truth();
                }
                if !is_false(&c) {
                    kept.push(c);
                }
            }
            if kept.len() == 1 {
                kept.pop().expect("one element")
            } else {
                Formula::Or(kept)
            }
        }
    }
}

/// Ground atoms an action can make true.
pub(crate) fn achievable(actions: &[GroundAction]) -> impl Iterator<Item = &Atom> {
    actions.iter().flat_map(|a| a.add.iter())
}
