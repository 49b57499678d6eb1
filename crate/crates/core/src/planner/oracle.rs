use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use super::{GroundAction, Plan, State};
use crate::pddl::{Domain, Formula, ProblemSkeleton};
use crate::simulator::{apply_action, holds};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMetric {
    /// Sum of agent costs.
    Cost,
    /// Number of steps.
    Length,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("no plan with at most {bound} steps")]
    UnsolvableWithinBound { bound: usize },
    #[error("more than {limit} states; instance too large for the oracle")]
    StateLimit { limit: usize },
}

const STATE_LIMIT: usize = 400_000;

/// Naive grounding: full cartesian product over typed entities, equality
/// left in the precondition for evaluation at search time.
fn naive_ground(domain: &Domain, sk: &ProblemSkeleton) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for schema in &domain.actions {
        let pools: Vec<Vec<&String>> = schema
            .params
            .iter()
            .map(|p| {
                sk.objects
                    .iter()
                    .filter(|(_, ts)| domain.types.satisfies(ts, &p.ty))
                    .map(|(e, _)| e)
                    .collect()
            })
            .collect();
        if pools.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; pools.len()];
        'outer: loop {
            let args: Vec<String> = idx.iter().zip(&pools).map(|(&i, p)| p[i].clone()).collect();
            let map: BTreeMap<&str, &str> = schema
                .params
                .iter()
                .map(|p| p.name.as_str())
                .zip(args.iter().map(String::as_str))
                .collect();
            let sub = |n: &str| map.get(n).map(|v| v.to_string());
            let agent = schema
                .cost_of
                .as_deref()
                .and_then(|v| map.get(v))
                .map(|s| s.to_string())
                .unwrap_or_default();
            out.push(GroundAction {
                name: schema.name.clone(),
                cost: sk.costs.get(&agent).copied().unwrap_or(1),
                agent,
                precondition: schema.precondition.map_atoms(&mut |a| Formula::Atom(a.substitute(&sub))),
                add: schema.add.iter().map(|a| a.substitute(&sub)).collect(),
                del: schema.del.iter().map(|a| a.substitute(&sub)).collect(),
                args,
            });
            // odometer increment
            let mut k = pools.len();
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < pools[k].len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
        }
    }
    out
}

struct Label {
    state: usize,
    value: u64,
    depth: usize,
    parent: Option<(usize, usize)>,
    alive: bool,
}

/// Exhaustive label-correcting search keeping every Pareto-optimal
/// (value, depth) label per state, so the answer is optimal among plans of
/// at most `bound` steps. Test oracle only.
pub fn oracle_plan(
    domain: &Domain,
    sk: &ProblemSkeleton,
    goal: &Formula,
    bound: usize,
    metric: OracleMetric,
) -> Result<Plan, OracleError> {
    let actions = naive_ground(domain, sk);
    let mut states: Vec<State> = vec![sk.init.clone()];
    let mut index: HashMap<State, usize> = HashMap::from([(sk.init.clone(), 0)]);
    let mut labels = vec![Label {
        state: 0,
        value: 0,
        depth: 0,
        parent: None,
        alive: true,
    }];
    let mut by_state: Vec<Vec<usize>> = vec![vec![0]];
    let mut queue = VecDeque::from([0usize]);
    let is_goal = |s: &State| goal.eval(&|a| holds(s, a));
    // Cheapest goal label so far. Every action costs at least one, so
    // nothing beyond it, or below a goal label, can improve the answer.
    let mut incumbent = if is_goal(&sk.init) { Some(0) } else { None };

    while let Some(li) = queue.pop_front() {
        if !labels[li].alive || labels[li].depth >= bound {
            continue;
        }
        if incumbent.is_some_and(|best| labels[li].value >= best) {
            continue;
        }
        let (sid, value, depth) = (labels[li].state, labels[li].value, labels[li].depth);
        let state = states[sid].clone();
        for (ai, act) in actions.iter().enumerate() {
            let Ok(next) = apply_action(&state, act) else { continue };
            let nv = value
                + match metric {
                    OracleMetric::Cost => act.cost,
                    OracleMetric::Length => 1,
                };
            let nd = depth + 1;
            if incumbent.is_some_and(|best| nv > best) {
                continue;
            }
            let nsid = match index.get(&next) {
                Some(&i) => i,
                None => {
                    if states.len() >= STATE_LIMIT {
                        return Err(OracleError::StateLimit { limit: STATE_LIMIT });
                    }
                    let i = states.len();
                    index.insert(next.clone(), i);
                    states.push(next);
                    by_state.push(Vec::new());
                    i
                }
            };
            let dominated = by_state[nsid]
                .iter()
                .any(|&o| labels[o].value <= nv && labels[o].depth <= nd);
            if dominated {
                continue;
            }
            for &o in &by_state[nsid] {
                if labels[o].value >= nv && labels[o].depth >= nd {
                    labels[o].alive = false;
                }
            }
            by_state[nsid].retain(|&o| labels[o].alive);
            let nl = labels.len();
            labels.push(Label {
                state: nsid,
                value: nv,
                depth: nd,
                parent: Some((li, ai)),
                alive: true,
            });
            by_state[nsid].push(nl);
            if is_goal(&states[nsid]) {
                incumbent = Some(incumbent.map_or(nv, |b: u64| b.min(nv)));
            } else {
                queue.push_back(nl);
            }
        }
    }

    let best = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.alive && is_goal(&states[l.state]))
        .min_by_key(|(_, l)| (l.value, l.depth))
        .map(|(i, _)| i)
        .ok_or(OracleError::UnsolvableWithinBound { bound })?;
    let mut steps = Vec::new();
    let mut cur = best;
    while let Some((p, ai)) = labels[cur].parent {
        steps.push(actions[ai].clone());
        cur = p;
    }
    steps.reverse();
    Ok(Plan::new(steps))
}
