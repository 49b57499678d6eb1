use std::fmt::Write as _;

use super::capability::TypedParam;
use super::domain::{ActionSchema, Domain};
use super::formula::Formula;
use super::problem::ProblemSkeleton;
use super::types::OBJECT;
use super::PddlError;

pub const REQUIREMENTS: &str =
    ":typing :action-costs :negative-preconditions :disjunctive-preconditions :equality";

fn params(ps: &[TypedParam]) -> String {
    ps.iter()
        .map(|p| format!("{} - {}", p.name, p.ty))
        .collect::<Vec<_>>()
        .join(" ")
}

fn effect(a: &ActionSchema) -> String {
    let mut parts: Vec<String> = a.add.iter().map(|x| x.to_string()).collect();
    parts.extend(a.del.iter().map(|x| format!("(not {x})")));
    if let Some(v) = &a.cost_of {
        parts.push(format!("(increase (total-cost) (cost {v}))"));
    }
    if parts.is_empty() {
        return "(and)".into();
    }
    format!("(and {})", parts.join(" "))
}

/// Members and aliases are carried in `; @` comments so the domain
/// round-trips; PDDL tools ignore them.
pub fn render_domain(d: &Domain) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (domain {})", d.name);
    let _ = writeln!(s, "  (:requirements {REQUIREMENTS})");
    s.push_str("  (:types\n");
    // parented entries first: trailing bare names are roots
    for (child, parent) in d.types.edges() {
        let _ = writeln!(s, "    {child} - {parent}");
    }
    for root in d.types.roots() {
        if root != OBJECT {
            let _ = writeln!(s, "    {root}");
        }
    }
    s.push_str("  )\n");
    for (ty, members) in d.types.members() {
        let list: Vec<&str> = members.iter().map(String::as_str).collect();
        let _ = writeln!(s, "  ; @members {ty} {}", list.join(" "));
    }
    for (alias, target) in &d.aliases {
        let _ = writeln!(s, "  ; @alias {alias} {target}");
    }
    s.push_str("  (:predicates\n");
    for p in &d.predicates {
        if p.params.is_empty() {
            let _ = writeln!(s, "    ({})", p.name);
        } else {
            let _ = writeln!(s, "    ({} {})", p.name, params(&p.params));
        }
    }
    s.push_str("  )\n");
    if d.cost_function {
        s.push_str("  (:functions (total-cost) - number (cost ?a - agent) - number)\n");
    }
    for a in &d.actions {
        let _ = writeln!(s, "  (:action {}", a.name);
        let _ = writeln!(s, "    :parameters ({})", params(&a.params));
        let _ = writeln!(s, "    :precondition {}", a.precondition);
        let _ = writeln!(s, "    :effect {})", effect(a));
    }
    s.push_str(")\n");
    trim_trailing(s)
}

fn trim_trailing(s: String) -> String {
    s.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
}

fn render(sk: &ProblemSkeleton, domain_name: &str, goal: Option<&Formula>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem task)");
    let _ = writeln!(s, "  (:domain {domain_name})");
    for (agent, hands) in &sk.hand_order {
        let _ = writeln!(s, "  ; @hands {agent} {}", hands.join(" "));
    }
    s.push_str("  (:objects\n");
    for (entity, types) in &sk.objects {
        for t in types {
            let _ = writeln!(s, "    {entity} - {t}");
        }
    }
    s.push_str("  )\n  (:init\n");
    for a in &sk.init {
        let _ = writeln!(s, "    {a}");
    }
    for (agent, cost) in &sk.costs {
        let _ = writeln!(s, "    (= (cost {agent}) {cost})");
    }
    s.push_str("    (= (total-cost) 0)\n  )\n");
    if let Some(g) = goal {
        let _ = writeln!(s, "  (:goal {g})");
    }
    s.push_str("  (:metric minimize (total-cost))\n)\n");
    s
}

pub fn render_problem(
    sk: &ProblemSkeleton,
    domain_name: &str,
    goal: &Formula,
) -> Result<String, PddlError> {
    if matches!(goal, Formula::And(cs) | Formula::Or(cs) if cs.is_empty()) {
        return Err(PddlError::EmptyGoal);
    }
    Ok(render(sk, domain_name, Some(goal)))
}

/// Problem text without a goal section, used as LLM context.
pub fn render_skeleton(sk: &ProblemSkeleton, domain_name: &str) -> String {
    render(sk, domain_name, None)
}
