use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use super::ground::{achievable, ground_actions_with_limit};
use super::{GroundAction, Plan, PlanLimits, PlannerError};
use crate::logic::{to_dnf, Conjunct};
use crate::pddl::{Atom, Domain, Formula, ProblemSkeleton};

type Bits = Box<[u64]>;

/// Conjunctive condition over interned atom ids.
#[derive(Clone, Debug)]
struct Cond {
    pos: Vec<usize>,
    neg: Vec<usize>,
}

impl Cond {
    fn holds(&self, s: &[u64]) -> bool {
        self.pos.iter().all(|&i| get(s, i)) && self.neg.iter().all(|&i| !get(s, i))
    }
}

fn get(s: &[u64], i: usize) -> bool {
    s[i / 64] >> (i % 64) & 1 == 1
}

fn set(s: &mut [u64], i: usize, v: bool) {
    if v {
        s[i / 64] |= 1 << (i % 64);
    } else {
        s[i / 64] &= !(1 << (i % 64));
    }
}

struct Compiled {
    /// Disjunction of conditions; empty means never applicable.
    pre: Vec<Cond>,
    add: Vec<usize>,
    del: Vec<usize>,
    cost: u64,
}

struct Interner {
    ids: HashMap<Atom, usize>,
}

impl Interner {
    fn id(&self, a: &Atom) -> Option<usize> {
        self.ids.get(a).copied()
    }

    /// Atoms outside the interned set can never become true, so positive
    /// occurrences kill a conjunct and negative ones are dropped.
    fn compile(&self, c: &Conjunct) -> Option<Cond> {
        let mut pos = Vec::new();
        for a in c.positive() {
            pos.push(self.id(a)?);
        }
        let neg = c.negative().filter_map(|a| self.id(a)).collect();
        Some(Cond { pos, neg })
    }

    fn compile_formula(&self, f: &Formula) -> Result<Vec<Cond>, PlannerError> {
        let dnf = to_dnf(f).map_err(|e| PlannerError::Invalid(e.to_string()))?;
        Ok(dnf.conjuncts.iter().filter_map(|c| self.compile(c)).collect())
    }
}

/// Uniform-cost search with duplicate detection. Among plans of equal cost
/// the one with the lexicographically smallest sequence of ground-action
/// indices wins, which makes the result deterministic.
pub fn plan(
    domain: &Domain,
    sk: &ProblemSkeleton,
    goal: &Formula,
    limits: &PlanLimits,
) -> Result<Plan, PlannerError> {
    let started = Instant::now();
    let goal_dnf = to_dnf(goal).map_err(|e| PlannerError::Invalid(e.to_string()))?;
    if goal_dnf.is_unsatisfiable() {
        return Err(PlannerError::Unsolvable);
    }
    let actions = ground_actions_with_limit(domain, sk, limits.grounding_limit)?;

    let mut ids = HashMap::new();
    for a in sk.init.iter().chain(achievable(&actions)) {
        let n = ids.len();
        ids.entry(a.clone()).or_insert(n);
    }
    let interner = Interner { ids };
    let words = interner.ids.len().div_ceil(64).max(1);

    let goal_conds: Vec<Cond> = goal_dnf.conjuncts.iter().filter_map(|c| interner.compile(c)).collect();
    if goal_conds.is_empty() {
        return Err(PlannerError::Unsolvable);
    }
    let mut compiled = Vec::with_capacity(actions.len());
    for a in &actions {
        compiled.push(Compiled {
            pre: interner.compile_formula(&a.precondition)?,
            add: a.add.iter().filter_map(|x| interner.id(x)).collect(),
            del: a.del.iter().filter_map(|x| interner.id(x)).collect(),
            cost: a.cost,
        });
    }

    let mut init = vec![0u64; words].into_boxed_slice();
    for a in &sk.init {
        set(&mut init, interner.ids[a], true);
    }

    // state id -> best key seen so far; closed once popped
    let mut states: Vec<Bits> = Vec::new();
    let mut index: HashMap<Bits, usize> = HashMap::new();
    let mut best: Vec<(u64, Vec<u32>)> = Vec::new();
    let mut closed: Vec<bool> = Vec::new();
    let mut heap: BinaryHeap<Reverse<(u64, Vec<u32>, usize)>> = BinaryHeap::new();

    index.insert(init.clone(), 0);
    states.push(init);
    best.push((0, Vec::new()));
    closed.push(false);
    heap.push(Reverse((0, Vec::new(), 0)));

    let mut expanded = 0usize;
    let mut best_g;
    while let Some(Reverse((g, path, sid))) = heap.pop() {
        if closed[sid] {
            continue;
        }
        closed[sid] = true;
        best_g = g;
        let state = states[sid].clone();
        if goal_conds.iter().any(|c| c.holds(&state)) {
            let steps: Vec<GroundAction> = path.iter().map(|&i| actions[i as usize].clone()).collect();
            log::debug!("plan found: cost {g}, {} steps, {expanded} expansions", steps.len());
            return Ok(Plan::new(steps));
        }
        expanded += 1;
        if expanded % 256 == 0 {
            let reason = if started.elapsed() > limits.timeout {
                Some("timeout")
            } else if limits.cancel.as_ref().is_some_and(|c| c.is_cancelled()) {
                Some("cancelled")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(PlannerError::ResourceExhausted {
                    reason: reason.into(),
                    expanded,
                    best_g,
                });
            }
        }
        if states.len() > limits.max_nodes {
            return Err(PlannerError::ResourceExhausted {
                reason: format!("node cap {}", limits.max_nodes),
                expanded,
                best_g,
            });
        }
        for (ai, act) in compiled.iter().enumerate() {
            if !act.pre.iter().any(|c| c.holds(&state)) {
                continue;
            }
            let mut next = state.clone();
            for &d in &act.del {
                set(&mut next, d, false);
            }
            for &a in &act.add {
                set(&mut next, a, true);
            }
            let ng = g + act.cost;
            let mut npath = path.clone();
            npath.push(ai as u32);
            let nid = match index.get(&next) {
                Some(&id) => {
                    if closed[id] || (ng, &npath) >= (best[id].0, &best[id].1) {
                        continue;
                    }
                    best[id] = (ng, npath.clone());
                    id
                }
                None => {
                    let id = states.len();
                    index.insert(next.clone(), id);
                    states.push(next);
                    best.push((ng, npath.clone()));
                    closed.push(false);
                    id
                }
            };
            heap.push(Reverse((ng, npath, nid)));
        }
    }
    Err(PlannerError::Unsolvable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentKind, AgentProfile, Location, Memory, Oam};
    use crate::pddl::{build_domain, build_problem_init, CapabilityLibrary};

    fn two_rooms() -> (Domain, ProblemSkeleton) {
        let robot = AgentProfile::new("robot0", AgentKind::Robot, ["move"], 1);
        let mut m = Memory::default();
        m.locations.push(Location::new("l0"));
        m.locations.push(Location::new("l1"));
        m.agent_locations.insert("robot0".into(), "l0".into());
        let d = build_domain(&m.scene, &Oam::new(), std::slice::from_ref(&robot), &CapabilityLibrary::builtin())
            .unwrap();
        let sk = build_problem_init(&d, &m, &[robot]).unwrap();
        (d, sk)
    }

    #[test]
    fn goal_true_initially_gives_empty_plan() {
        let (d, sk) = two_rooms();
        let g = Formula::Atom(Atom::new("at", ["robot0", "l0"]));
        let p = plan(&d, &sk, &g, &PlanLimits::default()).unwrap();
        assert_eq!((p.length, p.total_cost), (0, 0));
    }

    #[test]
    fn single_move() {
        let (d, sk) = two_rooms();
        let g = Formula::Atom(Atom::new("at", ["robot0", "l1"]));
        let p = plan(&d, &sk, &g, &PlanLimits::default()).unwrap();
        assert_eq!(p.lines(), vec!["move robot0 l0 l1"]);
    }

    #[test]
    fn contradictory_goal_is_unsolvable() {
        let (d, sk) = two_rooms();
        let a = Formula::Atom(Atom::new("at", ["robot0", "l1"]));
        let g = Formula::And(vec![a.clone(), Formula::not(a)]);
        assert_eq!(plan(&d, &sk, &g, &PlanLimits::default()), Err(PlannerError::Unsolvable));
    }

    #[test]
    fn cancelled_search_reports_resources() {
        let (d, sk) = two_rooms();
        let token = crate::planner::CancelToken::new();
        token.cancel();
        let limits = PlanLimits {
            max_nodes: 0,
            cancel: Some(token),
            ..PlanLimits::default()
        };
        let g = Formula::Atom(Atom::new("at", ["robot0", "l1"]));
        assert!(matches!(
            plan(&d, &sk, &g, &limits),
            Err(PlannerError::ResourceExhausted { .. })
        ));
    }
}
