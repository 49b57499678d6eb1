mod common;

use affplan_core::harness::{check_success, compute_minimality, scenario_config};
use affplan_core::orchestrator::{LoopStatus, OrchestratorConfig};
use common::{plan_lines, run_shipped, tool_lines};

fn assert_run(id: &str, tools: &[&str], plan: &[&str]) {
    let (scenario, outcome) = run_shipped(id);
    assert_eq!(outcome.status, LoopStatus::Success, "{id}: {:?}", outcome.error);
    assert_eq!(tool_lines(&outcome), tools, "{id}");
    assert_eq!(plan_lines(&outcome), plan, "{id}");
    let verdict = check_success(&scenario, &outcome);
    assert!(verdict.success, "{id}: {:?}", verdict.reason);
    let config = scenario_config(&scenario, &OrchestratorConfig::default());
    let m = compute_minimality(&scenario, &outcome, &config);
    assert_eq!(m.plan_minimal, Some(true), "{id}");
    assert_eq!(m.optimal_length, Some(plan.len()), "{id}");
    assert_eq!(m.tools_minimal, Some(true), "{id}");
}

#[test]
fn pick_and_place() {
    assert_run(
        "b1-pick-and-place",
        &["EXPLORE table0", "PLAN"],
        &[
            "grasp robot0 sponge0 table0 left",
            "move robot0 table0 table1",
            "place robot0 sponge0 table1 left",
        ],
    );
}

#[test]
fn handover_with_alternative() {
    assert_run(
        "b2-handover",
        &["EXPLORE table0", "SUGGEST_ALTERNATIVE glass", "PLAN"],
        &[
            "grasp robot0 coffee_cup0 table0 left",
            "move robot0 table0 human0",
            "handover robot0 human0 coffee_cup0 left",
        ],
    );
}

#[test]
fn pouring_with_two_alternatives_and_human_help() {
    assert_run(
        "b3-pouring",
        &["SUGGEST_ALTERNATIVE glass", "SUGGEST_ALTERNATIVE water", "PLAN"],
        &[
            "open human0 milk_box0 left",
            "grasp robot0 milk_box0 table0 right",
            "pour robot0 milk_box0 milk0 coffee_cup0 right",
        ],
    );
}

#[test]
fn wiping_after_exploration() {
    assert_run(
        "b4-wiping",
        &["EXPLORE table1", "PLAN"],
        &[
            "grasp robot0 sponge0 table1 left",
            "move robot0 table1 table0",
            "wipe robot0 table0 sponge0 left",
        ],
    );
}

#[test]
fn contradictory_goal_is_corrected() {
    let (scenario, outcome) = run_shipped("apple-trash");
    assert_eq!(outcome.status, LoopStatus::Success);
    let first = &outcome.records[0];
    assert_eq!(first.attempts.len(), 2);
    let err = first.attempts[0].error.as_deref().unwrap_or_default();
    assert!(err.contains("logical contradiction"), "{err}");
    assert!(first.attempts[1].error.is_none());
    assert_eq!(
        plan_lines(&outcome),
        ["grasp robot0 apple0 table0 left", "put_in robot0 apple0 trash_can0 table0 left"]
    );
    assert!(check_success(&scenario, &outcome).success);
}

#[test]
fn wrong_goal_completes_but_fails_the_task() {
    let (scenario, outcome) = run_shipped("b2-handover-bring");
    assert_eq!(outcome.status, LoopStatus::Success);
    let verdict = check_success(&scenario, &outcome);
    assert!(!verdict.success);
    assert!(verdict.reason.is_some());
}

#[test]
fn repeated_invalid_suggestion_hits_the_loop_cap() {
    let (scenario, outcome) = run_shipped("b3-pouring-cup");
    assert_eq!(outcome.status, LoopStatus::LoopLimit);
    assert_eq!(outcome.tool_count(), 10);
    assert!(outcome.plans.is_empty());
    assert!(!check_success(&scenario, &outcome).success);
}
