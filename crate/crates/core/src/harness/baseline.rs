use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::eval::{scenario_config, substitute_alternatives};
use super::scenario::Scenario;
use crate::llm::{slots, templates, LlmHandle, PromptRegistry};
use crate::model::{verbalize_memory, Memory, ObjectClass};
use crate::orchestrator::{build_task, OrchestratorConfig};
use crate::pddl::Formula;
use crate::planner::{ground_actions, GroundAction, Plan};
use crate::simulator::{goal_satisfied, replay, state_of};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BaselineVerdict {
    pub success: bool,
    pub plan: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn fail(plan: Vec<String>, error: impl Into<String>) -> BaselineVerdict {
    BaselineVerdict {
        success: false,
        plan,
        error: Some(error.into()),
    }
}

/// Optional numbering, bullets, commas and parentheses are ignored.
fn normalize(line: &str) -> String {
    let l = line.trim().trim_start_matches(['-', '*']).trim();
    let l = match l.split_once(['.', ')']) {
        Some((n, rest)) if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) => rest,
        _ => l,
    };
    l.replace(['(', ')', ','], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// The reference goal with any permitted substitution accepted.
fn permitted_goal(scenario: &Scenario, instances: &BTreeSet<String>) -> Formula {
    let mut choices: Vec<BTreeMap<ObjectClass, ObjectClass>> = vec![BTreeMap::new()];
    for (missing, allowed) in &scenario.alternatives {
        choices = choices
            .into_iter()
            .flat_map(|c| {
                allowed.iter().map(move |a| {
                    let mut c = c.clone();
                    c.insert(missing.clone(), a.clone());
                    c
                })
            })
            .collect();
    }
    let mut variants: Vec<Formula> = choices
        .iter()
        .map(|c| substitute_alternatives(&scenario.goal, c, instances))
        .collect();
    if variants.len() == 1 {
        variants.pop().expect("one variant")
    } else {
        Formula::Or(variants)
    }
}

/// Prompt slots over the fully revealed world, plus that world's memory.
fn baseline_slots(
    scenario: &Scenario,
    with_affordances: bool,
    config: &OrchestratorConfig,
) -> Result<(BTreeMap<String, String>, Memory), String> {
    let memory = scenario
        .revealed_memory(scenario.agent_starts.clone())
        .map_err(|e| e.to_string())?;
    let mut affordances = String::new();
    if with_affordances {
        affordances.push_str("Object affordances:\n");
        for class in memory.scene.classes() {
            let affs: Vec<&str> = config
                .oam
                .get(&class)
                .map(|s| s.iter().map(String::as_str).collect())
                .unwrap_or_default();
            affordances.push_str(&format!("  {class}: {}\n", affs.join(", ")));
        }
    }
    let available: BTreeSet<&str> = scenario
        .agents
        .iter()
        .flat_map(|a| a.capabilities.iter().map(String::as_str))
        .collect();
    let actions: Vec<String> = config
        .library
        .capabilities
        .iter()
        .filter(|c| available.contains(c.name.as_str()))
        .map(|c| {
            let params: Vec<String> = c.params.iter().map(|p| p.name.trim_start_matches('?').to_string()).collect();
            let mut placeholders = vec!["<agent>".to_string()];
            placeholders.extend(params.iter().map(|p| format!("<{p}>")));
            format!("  {} {}: {}", c.name, placeholders.join(" "), c.describe(&placeholders))
        })
        .collect();
    let s = slots([
        ("scene", verbalize_memory(&memory, &scenario.agents)),
        ("affordances", affordances),
        ("actions", actions.join("\n")),
        ("task", scenario.task.clone()),
    ]);
    Ok((s, memory))
}

pub fn baseline_prompt(scenario: &Scenario, with_affordances: bool, base: &OrchestratorConfig) -> Result<String, String> {
    let (s, _) = baseline_slots(scenario, with_affordances, &scenario_config(scenario, base))?;
    PromptRegistry::builtin()
        .get(templates::BASELINE_PLAN)
        .and_then(|t| t.render(&s))
        .map_err(|e| e.to_string())
}

/// The LLM writes the whole plan in one answer; it is replayed from the
/// fully revealed initial state and checked against the reference goal.
/// Lines not starting with an action name are treated as commentary.
pub fn baseline_llm_as_planner(
    scenario: &Scenario,
    llm: &LlmHandle,
    with_affordances: bool,
    base: &OrchestratorConfig,
) -> BaselineVerdict {
    let config = scenario_config(scenario, base);
    let (s, memory) = match baseline_slots(scenario, with_affordances, &config) {
        Ok(x) => x,
        Err(e) => return fail(Vec::new(), e),
    };
    let (domain, sk) = match build_task(&memory, &scenario.agents, &config) {
        Ok(x) => x,
        Err(e) => return fail(Vec::new(), e.to_string()),
    };
    let grounded: BTreeMap<String, GroundAction> = match ground_actions(&domain, &sk) {
        Ok(acts) => acts.into_iter().map(|a| (a.to_string(), a)).collect(),
        Err(e) => return fail(Vec::new(), e.to_string()),
    };
    let action_names: BTreeSet<&str> = domain.actions.iter().map(|a| a.name.as_str()).collect();
    let answer = match llm.complete(templates::BASELINE_PLAN, &s) {
        Ok(a) => a,
        Err(e) => return fail(Vec::new(), e.to_string()),
    };

    let mut steps = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in answer.lines().enumerate() {
        let line = normalize(raw);
        match line.split_whitespace().next() {
            Some(first) if action_names.contains(first) => {}
            _ => continue,
        }
        lines.push(line.clone());
        match grounded.get(&line) {
            Some(a) => steps.push(a.clone()),
            None => return fail(lines, format!("line {}: '{}' is not a valid action", i + 1, raw.trim())),
        }
    }
    let trace = match replay(&state_of(&memory), &Plan::new(steps)) {
        Ok(t) => t,
        Err(e) => return fail(lines, e.to_string()),
    };
    let goal = permitted_goal(scenario, &memory.scene.instance_names());
    if !goal_satisfied(&trace.final_state, &goal) {
        return fail(lines, format!("the final state does not satisfy {}", goal.to_pddl()));
    }
    BaselineVerdict {
        success: true,
        plan: lines,
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::normalize;

    #[test]
    fn numbering_and_parentheses_are_stripped() {
        assert_eq!(normalize("1. (grasp robot0 sponge0 table0 left)"), "grasp robot0 sponge0 table0 left");
        assert_eq!(normalize("- Move robot0, table0, table1"), "move robot0 table0 table1");
    }
}
