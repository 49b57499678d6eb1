mod common;

use affplan_core::harness::{run_scenario, Scenario};
use affplan_core::llm::{LlmHandle, ScriptEntry};
use affplan_core::logic::{check_semantics, builtin_conditions, TOO_COMPLEX_ID, TOO_COMPLEX_MESSAGE};
use affplan_core::model::{AffordanceCatalog, ObjectClass, Oam};
use affplan_core::orchestrator::{LoopStatus, OrchestratorConfig};
use affplan_core::pddl::parse_plain_formula;
use affplan_core::suggest::{suggest_alternative, SuggestConfig, SuggestError, SuggestionPath};

const KITCHEN: &str = "\
[ID]
kitchen
[TASK]
I want a glass of water
[LOCATIONS]
table0 table
[EXPLORED]
table0
[AGENTS]
robot0 robot cost=1 caps=grasp,place,put_in,take_out,move,handover,pour,wipe hands=left,right at=table0
[OBJECTS]
table0: coffee_cup0 milk_box0 milk0 apple0
[RELATIONS]
on coffee_cup0 table0
on milk_box0 table0
on apple0 table0
liquid_in milk0 milk_box0
closed milk_box0
[GOAL]
on apple0 table0
";

fn with_script(base: &str, script: &str) -> Scenario {
    Scenario::parse(&format!("{base}[SCRIPT]\n{script}")).unwrap()
}

fn suggest(relevance: &str, guided: Option<&str>, direct: Option<&str>) -> Result<affplan_core::suggest::SuggestionOutcome, SuggestError> {
    let scenario = Scenario::parse(KITCHEN).unwrap();
    let mut memory = scenario.initial_memory().unwrap();
    let mut entries = vec![ScriptEntry::new("affordance-relevance", relevance)];
    if let Some(g) = guided {
        entries.push(ScriptEntry::new("suggest-with-affordance", g));
    }
    if let Some(d) = direct {
        entries.push(ScriptEntry::new("suggest-direct", d));
    }
    let llm = LlmHandle::scripted(entries);
    let out = suggest_alternative(
        &ObjectClass::new("glass"),
        "I want a glass of water",
        &mut memory,
        &Oam::builtin(),
        &AffordanceCatalog::builtin(),
        &llm,
        SuggestConfig::default(),
    );
    if let Ok(o) = &out {
        assert_eq!(memory.alternatives.get(&ObjectClass::new("glass")), Some(&o.chosen));
    }
    out
}

#[test]
fn guided_suggestion() {
    let o = suggest("liquid-contain, drink", Some("coffee_cup"), None).unwrap();
    assert_eq!(o.path, SuggestionPath::Guided);
    assert_eq!(o.chosen.as_str(), "coffee_cup");
}

#[test]
fn empty_filter_falls_back_to_direct_question() {
    // nothing in the scene can precise-pour
    let o = suggest("precise-pour", None, Some("coffee_cup")).unwrap();
    assert_eq!(o.path, SuggestionPath::FallbackEmptyFilter);
    assert_eq!(o.chosen.as_str(), "coffee_cup");
}

#[test]
fn out_of_scene_choice_falls_back_to_direct_question() {
    let o = suggest("liquid-contain, drink", Some("mug"), Some("coffee_cup")).unwrap();
    assert_eq!(o.path, SuggestionPath::FallbackBadChoice);
    assert_eq!(o.chosen.as_str(), "coffee_cup");
}

#[test]
fn out_of_scene_direct_answer_is_an_error() {
    let err = suggest("precise-pour", None, Some("mug")).unwrap_err();
    assert!(matches!(err, SuggestError::Failed { .. }), "{err}");
}

#[test]
fn irrelevant_affordances_are_ignored() {
    // "cut" is not an affordance of glass; only drink remains
    let o = suggest("cut, drink", Some("coffee_cup"), None).unwrap();
    assert_eq!(o.relevant.iter().map(String::as_str).collect::<Vec<_>>(), ["drink"]);
}

#[test]
fn oversized_goal_is_rejected_as_too_complex() {
    let clauses: Vec<String> = (0..13).map(|i| format!("(or (p a{i}) (q a{i}))")).collect();
    let goal = parse_plain_formula(&format!("and {}", clauses.join(" "))).unwrap();
    let err = check_semantics(&goal, &builtin_conditions()).unwrap();
    assert_eq!(err.condition, TOO_COMPLEX_ID);
    assert_eq!(err.message, TOO_COMPLEX_MESSAGE);
}

#[test]
fn too_complex_goal_is_corrected_in_the_loop() {
    let mut objects = String::new();
    let mut relations = String::new();
    let mut clauses = Vec::new();
    for i in 0..13 {
        objects.push_str(&format!(" apple{i}"));
        relations.push_str(&format!("on apple{i} table0\n"));
        clauses.push(format!("(or (on apple{i} table0) (inhand apple{i} robot0))"));
    }
    let base = KITCHEN
        .replace("table0: coffee_cup0 milk_box0 milk0 apple0", &format!("table0:{objects}"))
        .replace("on coffee_cup0 table0\non milk_box0 table0\non apple0 table0\nliquid_in milk0 milk_box0\nclosed milk_box0\n", &relations);
    let scenario = with_script(
        &base,
        &format!(
            "@tool-selection\nTOOL PLAN\n@goal\nGOAL: and {}\n@goal-correction contains=\"too complex\"\nGOAL: inhand apple0 robot0\n",
            clauses.join(" ")
        ),
    );
    let llm = LlmHandle::scripted(scenario.script.clone());
    let out = run_scenario(&scenario, &llm, &OrchestratorConfig::default()).unwrap();
    assert_eq!(out.status, LoopStatus::Success);
    let attempts = &out.records[0].attempts;
    assert_eq!(attempts.len(), 2);
    assert!(attempts[0].error.as_deref().unwrap().contains("too complex"));
}

#[test]
fn loop_cap_ends_with_loop_limit() {
    let scenario = with_script(KITCHEN, "@tool-selection reusable\nTOOL EXPLORE table0\n");
    let llm = LlmHandle::scripted(scenario.script.clone());
    let out = run_scenario(&scenario, &llm, &OrchestratorConfig::default()).unwrap();
    assert_eq!(out.status, LoopStatus::LoopLimit);
    assert_eq!(out.tool_count(), 10);
}

#[test]
fn repeated_planning_failure_ends_with_planning_failed() {
    // the milk box is closed and the robot cannot open it
    let scenario = with_script(
        KITCHEN,
        "@tool-selection reusable\nTOOL PLAN\n@goal reusable\nGOAL: liquid_in milk0 coffee_cup0\n@goal-correction reusable\nGOAL: liquid_in milk0 coffee_cup0\n",
    );
    let llm = LlmHandle::scripted(scenario.script.clone());
    let out = run_scenario(&scenario, &llm, &OrchestratorConfig::default()).unwrap();
    assert_eq!(out.status, LoopStatus::PlanningFailed);
    assert!(out.records.iter().all(|r| !r.ok));
    assert_eq!(out.records[0].attempts.len(), 5);
}

#[test]
fn answer_without_tool_ends_with_no_tool_selected() {
    let scenario = with_script(KITCHEN, "@tool-selection\nI am not sure what to do.\n");
    let llm = LlmHandle::scripted(scenario.script.clone());
    let out = run_scenario(&scenario, &llm, &OrchestratorConfig::default()).unwrap();
    assert_eq!(out.status, LoopStatus::NoToolSelected);
    assert_eq!(out.tool_count(), 0);
}

#[test]
fn unknown_location_ends_with_no_tool_selected() {
    let scenario = with_script(KITCHEN, "@tool-selection\nTOOL EXPLORE kitchen9\n");
    let llm = LlmHandle::scripted(scenario.script.clone());
    let out = run_scenario(&scenario, &llm, &OrchestratorConfig::default()).unwrap();
    assert_eq!(out.status, LoopStatus::NoToolSelected);
}

#[test]
fn llm_failure_ends_with_no_tool_selected() {
    let scenario = Scenario::parse(KITCHEN).unwrap();
    let llm = LlmHandle::scripted(Vec::new());
    let out = run_scenario(&scenario, &llm, &OrchestratorConfig::default()).unwrap();
    assert_eq!(out.status, LoopStatus::NoToolSelected);
    assert!(out.error.is_some());
}

#[test]
fn failed_suggestion_does_not_end_the_loop() {
    let scenario = with_script(
        KITCHEN,
        "@tool-selection\nTOOL SUGGEST_ALTERNATIVE glass\n@affordance-relevance\nprecise-pour\n@suggest-direct\nmug\n@tool-selection\nTOOL PLAN\n@goal\nGOAL: inhand apple0 robot0\n",
    );
    let llm = LlmHandle::scripted(scenario.script.clone());
    let out = run_scenario(&scenario, &llm, &OrchestratorConfig::default()).unwrap();
    assert_eq!(out.status, LoopStatus::Success);
    assert!(!out.records[0].ok);
    assert!(out.memory.alternatives.is_empty());
}
