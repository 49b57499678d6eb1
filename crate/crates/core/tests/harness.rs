mod common;

use affplan_core::harness::{baseline_llm_as_planner, evaluate_suite, Backend};
use affplan_core::llm::{LlmHandle, ScriptEntry};
use affplan_core::model::{AffordanceCatalog, ObjectClass};
use affplan_core::oam::{generate_oam, OamStrategy};
use affplan_core::orchestrator::OrchestratorConfig;

fn baseline(id: &str, answer: &str, with_affordances: bool) -> affplan_core::harness::BaselineVerdict {
    let scenario = common::load(id);
    let llm = LlmHandle::scripted(vec![ScriptEntry::new("baseline-plan", answer)]);
    baseline_llm_as_planner(&scenario, &llm, with_affordances, &OrchestratorConfig::default())
}

#[test]
fn baseline_accepts_a_valid_plan() {
    let v = baseline(
        "b1-pick-and-place",
        "Here is the plan:\n1. move robot0 table1 table0\n2. grasp robot0 sponge0 table0 left\n3. move robot0 table0 table1\n4. place robot0 sponge0 table1 left",
        true,
    );
    assert!(v.success, "{:?}", v.error);
    assert_eq!(v.plan.len(), 4);
}

#[test]
fn baseline_rejects_an_ungroundable_line() {
    let v = baseline("b1-pick-and-place", "grasp robot0 sponge0 table9 left", false);
    assert!(!v.success);
    assert!(v.error.unwrap().contains("line 1"));
}

#[test]
fn baseline_rejects_a_precondition_violation() {
    // the robot starts at table1, away from the sponge
    let v = baseline("b1-pick-and-place", "(grasp robot0 sponge0 table0 left)", false);
    assert!(!v.success);
    assert!(v.error.unwrap().contains("at robot0 table0"));
}

#[test]
fn baseline_accepts_a_permitted_substitute() {
    let v = baseline(
        "b2-handover",
        "move robot0 human0 table0\ngrasp robot0 coffee_cup0 table0 left\nmove robot0 table0 human0\nhandover robot0 human0 coffee_cup0 left",
        true,
    );
    assert!(v.success, "{:?}", v.error);
}

#[test]
fn baseline_rejects_a_plan_missing_the_goal() {
    let v = baseline("b2-handover", "move robot0 human0 table0\ngrasp robot0 coffee_cup0 table0 left", true);
    assert!(!v.success);
    assert!(v.error.unwrap().contains("does not satisfy"));
}

#[test]
fn logical_questions_are_combined() {
    let catalog = AffordanceCatalog::parse(
        "grasp\tplanning\tThe object can be grasped\ncontain\tplanning\tThe object can contain other objects\n",
    )
    .unwrap();
    let strategy = OamStrategy::yes_no_logical(
        &catalog,
        "contain: and: Does the object have an opening? | Can the object hold small items?\n",
    )
    .unwrap();
    let llm = LlmHandle::scripted(vec![
        ScriptEntry::new("oam-yesno", "Yes.").containing("\"cup\"").reusable(),
        ScriptEntry::new("oam-yesno", "No").containing("\"table\"").containing("grasped"),
        ScriptEntry::new("oam-yesno", "no").containing("\"table\"").containing("opening"),
        ScriptEntry::new("oam-yesno", "maybe?").containing("\"sponge\"").containing("grasped"),
        ScriptEntry::new("oam-yesno", "yes").containing("\"sponge\"").containing("opening"),
        ScriptEntry::new("oam-yesno", "no").containing("\"sponge\"").containing("small items"),
    ]);
    let classes: Vec<ObjectClass> = ["cup", "table", "sponge"].iter().map(|c| ObjectClass::new(*c)).collect();
    let out = generate_oam(&classes, &catalog, &strategy, &llm, 3).unwrap();
    let get = |c: &str| {
        out.oam
            .get(&ObjectClass::new(c))
            .unwrap()
            .iter()
            .cloned()
            .collect::<Vec<_>>()
    };
    assert_eq!(get("cup"), ["contain", "grasp"]);
    assert!(get("table").is_empty());
    assert!(get("sponge").is_empty());
    assert_eq!(out.warnings.len(), 1, "{:?}", out.warnings);
}

#[test]
fn suite_aggregates_per_subset() {
    let report = evaluate_suite(&common::scenarios_dir(), None, &Backend::Scripted, &OrchestratorConfig::default(), 4).unwrap();
    assert_eq!(report.rows.len(), 7);
    let appendix = &report.subsets["appendix"];
    assert_eq!((appendix.scenarios, appendix.successes), (4, 4));
    assert_eq!(appendix.minimal_plan_rate, 1.0);
    assert_eq!(report.subsets["appendix-failures"].successes, 0);
    // rows come back in file order whatever the job count
    let ids: Vec<&str> = report.rows.iter().map(|r| r.id.as_str()).collect();
    let files: Vec<String> = affplan_core::harness::scenario_files(&common::scenarios_dir())
        .unwrap()
        .iter()
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(ids, files);
}
