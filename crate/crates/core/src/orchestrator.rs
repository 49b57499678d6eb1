//! The outer feedback loop: the LLM picks a tool from verbalized memory,
//! the tool runs against memory and the world, until a final plan is
//! executed or the loop gives up.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::llm::{extract_goal, parse_choice, slots, templates, LlmHandle, TranscriptRecord};
use crate::logic::{builtin_conditions, check_semantics, SemanticCondition};
use crate::model::{
    verbalize_memory, AffordanceCatalog, AgentKind, AgentProfile, HistoryEntry, Memory, ObjectClass, Oam,
};
use crate::pddl::{
    build_domain, build_problem_init, parse_formula, render_domain, render_skeleton, CapabilityLibrary, Domain,
    Formula, ProblemSkeleton,
};
use crate::planner::{external_plan, plan, ExternalPlanner, Plan, PlanLimits};
use crate::simulator::{execute_plan, explore, goal_satisfied, state_of, World};
use crate::suggest::{suggest_alternative, SuggestConfig, SuggestionOutcome};

pub const DEFAULT_MAX_ITERATIONS: usize = 10;
pub const DEFAULT_CORRECTION_LOOPS: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "tool", content = "argument", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tool {
    Plan,
    PartialPlan,
    SuggestAlternative(ObjectClass),
    Explore(String),
}

impl Tool {
    pub const NAMES: [&'static str; 4] = ["PLAN", "PARTIAL_PLAN", "SUGGEST_ALTERNATIVE", "EXPLORE"];

    pub fn name(&self) -> &'static str {
        match self {
            Tool::Plan => "PLAN",
            Tool::PartialPlan => "PARTIAL_PLAN",
            Tool::SuggestAlternative(_) => "SUGGEST_ALTERNATIVE",
            Tool::Explore(_) => "EXPLORE",
        }
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tool::SuggestAlternative(c) => write!(f, "SUGGEST_ALTERNATIVE {c}"),
            Tool::Explore(l) => write!(f, "EXPLORE {l}"),
            t => f.write_str(t.name()),
        }
    }
}

const TOOL_DESCRIPTIONS: &str = "\
PLAN - generate and execute a plan that completes the task; use it when every object the task needs is known
PARTIAL_PLAN - generate and execute a plan that gets as close to the task as the known objects allow; the loop continues afterwards
SUGGEST_ALTERNATIVE <object class> - find a replacement in the scene for an object class the task needs but the scene lacks
EXPLORE <location> - go to an unexplored location and observe the objects there";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalKind {
    Full,
    Partial,
}

#[derive(Clone, Debug)]
pub enum PlannerBackend {
    Embedded,
    External(ExternalPlanner),
}

#[derive(Clone, Debug)]
pub struct CorrectionConfig {
    /// Goal generation attempts, at least 1.
    pub max_loops: usize,
    pub limits: PlanLimits,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            max_loops: DEFAULT_CORRECTION_LOOPS,
            limits: PlanLimits::default(),
        }
    }
}

/// Everything besides memory, world and LLM that a run depends on.
#[derive(Clone, Debug)]
pub struct OrchestratorConfig {
    pub correction: CorrectionConfig,
    pub max_iterations: usize,
    pub library: CapabilityLibrary,
    pub conditions: Vec<SemanticCondition>,
    pub oam: Oam,
    pub catalog: AffordanceCatalog,
    pub suggest: SuggestConfig,
    pub planner: PlannerBackend,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        OrchestratorConfig {
            correction: CorrectionConfig::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            library: CapabilityLibrary::builtin(),
            conditions: builtin_conditions(),
            oam: Oam::builtin(),
            catalog: AffordanceCatalog::builtin(),
            suggest: SuggestConfig::default(),
            planner: PlannerBackend::Embedded,
        }
    }
}

/// Parses the last `TOOL <name> [argument]` line and checks the argument
/// against memory. Anything unusable yields `None`.
pub fn parse_tool(response: &str, memory: &Memory) -> Option<Tool> {
    let line = response
        .lines()
        .rev()
        .find_map(|l| {
            let l = l.trim().trim_matches(|c| c == '`' || c == '*').trim();
            let upper = l.to_ascii_uppercase();
            upper.find("TOOL ").map(|i| l[i + 5..].trim().to_string())
        })?;
    let mut words = line.split_whitespace().map(|w| {
        w.trim_matches(|c: char| c.is_ascii_punctuation() && c != '_' && c != '-')
            .to_string()
    });
    let names: Vec<String> = Tool::NAMES.iter().map(|s| s.to_string()).collect();
    let name = parse_choice(&words.next()?, &names)?;
    let arg = words.next().map(|a| a.to_lowercase());
    match name.as_str() {
        "PLAN" => Some(Tool::Plan),
        "PARTIAL_PLAN" => Some(Tool::PartialPlan),
        "EXPLORE" => {
            let loc = arg?;
            if memory.location(&loc).is_some() {
                Some(Tool::Explore(loc))
            } else {
                log::warn!("EXPLORE names unknown location '{loc}'");
                None
            }
        }
        "SUGGEST_ALTERNATIVE" => {
            let class = ObjectClass::parse(&arg?).ok()?;
            if memory.scene.has_class(&class) {
                log::warn!("SUGGEST_ALTERNATIVE names '{class}', which is in the scene");
                None
            } else {
                Some(Tool::SuggestAlternative(class))
            }
        }
        _ => None,
    }
}

/// Asks the LLM for the next tool. Transport errors propagate.
pub fn select_tool(
    task: &str,
    memory: &Memory,
    agents: &[AgentProfile],
    llm: &LlmHandle,
) -> Result<Option<Tool>, crate::llm::LlmError> {
    let s = slots([
        ("tools", TOOL_DESCRIPTIONS.to_string()),
        ("memory", verbalize_memory(memory, agents)),
        ("task", task.to_string()),
    ]);
    let answer = llm.complete(templates::TOOL_SELECTION, &s)?;
    Ok(parse_tool(&answer, memory))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Attempt {
    pub goal: String,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanSuccess {
    pub plan: Plan,
    #[serde(serialize_with = "as_pddl")]
    pub goal: Formula,
    pub attempts: Vec<Attempt>,
}

fn as_pddl<S: serde::Serializer>(f: &Formula, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_pddl())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanFailure {
    pub reason: String,
    pub attempts: Vec<Attempt>,
}

/// Builds the planning task for the current memory.
pub fn build_task(
    memory: &Memory,
    agents: &[AgentProfile],
    config: &OrchestratorConfig,
) -> Result<(Domain, ProblemSkeleton), crate::pddl::PddlError> {
    let domain = build_domain(&memory.scene, &config.oam, agents, &config.library)?;
    let sk = build_problem_init(&domain, memory, agents)?;
    Ok((domain, sk))
}

fn run_planner(
    domain: &Domain,
    sk: &ProblemSkeleton,
    goal: &Formula,
    config: &OrchestratorConfig,
) -> Result<Plan, String> {
    match &config.planner {
        PlannerBackend::Embedded => plan(domain, sk, goal, &config.correction.limits).map_err(|e| e.to_string()),
        PlannerBackend::External(p) => external_plan(domain, sk, goal, p).map_err(|e| e.to_string()),
    }
}

/// Asks for a goal, validates it and plans; every error is handed back to
/// the LLM for correction, at most `max_loops` times.
pub fn plan_with_correction(
    task: &str,
    memory: &Memory,
    agents: &[AgentProfile],
    kind: GoalKind,
    config: &OrchestratorConfig,
    llm: &LlmHandle,
) -> Result<PlanSuccess, PlanFailure> {
    let mut attempts: Vec<Attempt> = Vec::new();
    let fail = |reason: String, attempts: Vec<Attempt>| PlanFailure { reason, attempts };
    let (domain, sk) = match build_task(memory, agents, config) {
        Ok(x) => x,
        Err(e) => return Err(fail(format!("cannot build the planning task: {e}"), attempts)),
    };
    let domain_text = render_domain(&domain);
    let problem_text = render_skeleton(&sk, &domain.name);

    for _ in 0..config.correction.max_loops.max(1) {
        let request = match attempts.last() {
            None => {
                let id = match kind {
                    GoalKind::Full => templates::GOAL,
                    GoalKind::Partial => templates::PARTIAL_GOAL,
                };
                let s = slots([
                    ("task", task.to_string()),
                    ("domain", domain_text.clone()),
                    ("problem", problem_text.clone()),
                ]);
                llm.complete(id, &s)
            }
            Some(prev) => {
                let s = slots([
                    ("task", task.to_string()),
                    ("previous_goal", prev.goal.clone()),
                    ("error", prev.error.clone().unwrap_or_default()),
                    ("domain", domain_text.clone()),
                    ("problem", problem_text.clone()),
                ]);
                llm.complete(templates::GOAL_CORRECTION, &s)
            }
        };
        let answer = match request {
            Ok(a) => a,
            Err(e) => return Err(fail(e.to_string(), attempts)),
        };
        let goal_text = extract_goal(&answer);
        let outcome = parse_formula(&goal_text, &domain, &sk)
            .map_err(|e| e.to_string())
            .and_then(|goal| match check_semantics(&goal, &config.conditions) {
                Some(err) => Err(err.message),
                None => Ok(goal),
            })
            .and_then(|goal| run_planner(&domain, &sk, &goal, config).map(|p| (goal, p)));
        match outcome {
            Ok((goal, plan)) => {
                attempts.push(Attempt {
                    goal: goal_text,
                    error: None,
                });
                log::info!("plan with {} steps after {} attempt(s)", plan.length, attempts.len());
                return Ok(PlanSuccess { plan, goal, attempts });
            }
            Err(error) => {
                log::info!("goal {goal_text:?} rejected: {error}");
                attempts.push(Attempt {
                    goal: goal_text,
                    error: Some(error),
                });
            }
        }
    }
    let last = attempts
        .last()
        .and_then(|a| a.error.clone())
        .unwrap_or_default();
    Err(fail(format!("no valid goal after {} attempts: {last}", attempts.len()), attempts))
}

/// What one tool invocation did.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolRecord {
    pub tool: Tool,
    pub ok: bool,
    pub note: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub attempts: Vec<Attempt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<SuggestionOutcome>,
}

impl ToolRecord {
    fn new(tool: &Tool, ok: bool, note: impl Into<String>) -> Self {
        ToolRecord {
            tool: tool.clone(),
            ok,
            note: note.into(),
            attempts: Vec::new(),
            goal: None,
            plan: None,
            suggestion: None,
        }
    }
}

/// The agent that walks around when exploring: the first robot, else the first agent.
fn explorer(agents: &[AgentProfile]) -> Option<&AgentProfile> {
    agents.iter().find(|a| a.kind == AgentKind::Robot).or(agents.first())
}

/// Runs one tool, updating `memory`. Returns the record and whether the
/// loop is finished (only a successful full plan ends it). Failures are
/// noted in the instruction history for the next selection.
pub fn execute_tool(
    tool: &Tool,
    task: &str,
    memory: &mut Memory,
    world: &World,
    agents: &[AgentProfile],
    config: &OrchestratorConfig,
    llm: &LlmHandle,
) -> (ToolRecord, Option<Formula>, bool) {
    let (record, goal, fin) = match tool {
        Tool::Plan | Tool::PartialPlan => {
            let kind = if *tool == Tool::Plan { GoalKind::Full } else { GoalKind::Partial };
            match plan_with_correction(task, memory, agents, kind, config, llm) {
                Ok(ok) => match execute_plan(memory, &ok.plan) {
                    Ok((next, _)) => {
                        *memory = next;
                        let verified = goal_satisfied(&state_of(memory), &ok.goal);
                        let mut r = ToolRecord::new(
                            tool,
                            verified,
                            format!("executed a plan with {} steps", ok.plan.length),
                        );
                        if !verified {
                            r.note = "the executed plan did not reach its goal".into();
                        }
                        r.goal = Some(ok.goal.to_pddl());
                        r.attempts = ok.attempts;
                        r.plan = Some(ok.plan);
                        (r, Some(ok.goal), kind == GoalKind::Full && verified)
                    }
                    Err(e) => {
                        let mut r = ToolRecord::new(tool, false, format!("plan execution failed: {e}"));
                        r.attempts = ok.attempts;
                        r.plan = Some(ok.plan);
                        (r, None, false)
                    }
                },
                Err(fail) => {
                    let mut r = ToolRecord::new(tool, false, format!("planning failed: {}", fail.reason));
                    r.attempts = fail.attempts;
                    (r, None, false)
                }
            }
        }
        Tool::SuggestAlternative(missing) => {
            match suggest_alternative(missing, task, memory, &config.oam, &config.catalog, llm, config.suggest) {
                Ok(out) => {
                    let mut r = ToolRecord::new(
                        tool,
                        true,
                        format!("{} can replace {} ({})", out.chosen, out.missing, out.path.as_str()),
                    );
                    r.suggestion = Some(out);
                    (r, None, false)
                }
                Err(e) => (ToolRecord::new(tool, false, format!("no alternative found: {e}")), None, false),
            }
        }
        Tool::Explore(location) => {
            let result = match explorer(agents) {
                Some(a) => explore(memory, location, world, &a.name).map_err(|e| e.to_string()),
                None => Err("no agent can explore".to_string()),
            };
            match result {
                Ok(next) => {
                    let before = memory.scene.instance_names().len();
                    *memory = next;
                    let found = memory.scene.instance_names().len() - before;
                    (ToolRecord::new(tool, true, format!("explored {location}, found {found} new objects")), None, false)
                }
                Err(e) => (ToolRecord::new(tool, false, format!("exploration failed: {e}")), None, false),
            }
        }
    };
    if !record.ok {
        memory
            .instruction_history
            .push(HistoryEntry::System(format!("{tool} failed: {}", record.note)));
    }
    (record, goal, fin)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopStatus {
    Success,
    NoToolSelected,
    LoopLimit,
    PlanningFailed,
}

impl LoopStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LoopStatus::Success => "success",
            LoopStatus::NoToolSelected => "no-tool-selected",
            LoopStatus::LoopLimit => "loop-limit",
            LoopStatus::PlanningFailed => "planning-failed",
        }
    }
}

impl fmt::Display for LoopStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopOutcome {
    pub status: LoopStatus,
    pub memory: Memory,
    /// Plans in execution order.
    pub plans: Vec<Plan>,
    pub trace: Vec<Tool>,
    pub records: Vec<ToolRecord>,
    /// Goal of the last executed plan.
    pub last_goal: Option<Formula>,
    pub transcript: Vec<TranscriptRecord>,
    /// Why tool selection stopped, when it failed at the LLM level.
    pub error: Option<String>,
    /// Agent positions just before the first executed plan.
    pub plan_start: Option<BTreeMap<String, String>>,
}

impl LoopOutcome {
    pub fn tool_count(&self) -> usize {
        self.trace.len()
    }

    /// Total steps over all executed plans.
    pub fn plan_length(&self) -> usize {
        self.plans.iter().map(|p| p.length).sum()
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            status: self.status,
            tools: self.trace.iter().map(ToString::to_string).collect(),
            steps: self.records.clone(),
            plan: self.plans.iter().flat_map(Plan::lines).collect(),
            alternatives: self
                .memory
                .alternatives
                .iter()
                .map(|(m, a)| (m.to_string(), a.to_string()))
                .collect(),
            final_state: state_of(&self.memory).iter().map(|a| a.to_string()).collect(),
            error: self.error.clone(),
        }
    }
}

/// Machine-readable run summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub status: LoopStatus,
    pub tools: Vec<String>,
    pub steps: Vec<ToolRecord>,
    pub plan: Vec<String>,
    pub alternatives: Vec<(String, String)>,
    pub final_state: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Selects and executes tools until a full plan succeeds, no tool is
/// chosen or `max_iterations` is reached.
pub fn run(
    task: &str,
    memory: Memory,
    world: &World,
    agents: &[AgentProfile],
    config: &OrchestratorConfig,
    llm: &LlmHandle,
) -> LoopOutcome {
    let mut memory = memory;
    memory.instruction_history.push(HistoryEntry::User(task.to_string()));
    let transcript_start = llm.transcript().len();
    let mut out = LoopOutcome {
        status: LoopStatus::LoopLimit,
        memory: Memory::default(),
        plans: Vec::new(),
        trace: Vec::new(),
        records: Vec::new(),
        last_goal: None,
        transcript: Vec::new(),
        error: None,
        plan_start: None,
    };
    for _ in 0..config.max_iterations {
        let tool = match select_tool(task, &memory, agents, llm) {
            Ok(Some(t)) => t,
            Ok(None) => {
                out.status = LoopStatus::NoToolSelected;
                break;
            }
            Err(e) => {
                out.status = LoopStatus::NoToolSelected;
                out.error = Some(e.to_string());
                break;
            }
        };
        log::info!("tool: {tool}");
        let positions = memory.agent_locations.clone();
        let (record, goal, fin) = execute_tool(&tool, task, &mut memory, world, agents, config, llm);
        if record.ok {
            if let Some(p) = &record.plan {
                out.plans.push(p.clone());
                out.plan_start.get_or_insert(positions);
            }
        }
        if goal.is_some() {
            out.last_goal = goal;
        }
        out.trace.push(tool);
        out.records.push(record);
        if fin {
            out.status = LoopStatus::Success;
            break;
        }
    }
    if out.status == LoopStatus::LoopLimit {
        let last_failed_plan = out
            .records
            .last()
            .is_some_and(|r| !r.ok && matches!(r.tool, Tool::Plan | Tool::PartialPlan));
        if last_failed_plan {
            out.status = LoopStatus::PlanningFailed;
        }
    }
    out.memory = memory;
    out.transcript = llm.transcript().split_off(transcript_start);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Location;

    fn memory() -> Memory {
        let mut m = Memory::default();
        m.locations.push(Location::new("table0"));
        m
    }

    #[test]
    fn tool_lines_parse() {
        let m = memory();
        assert_eq!(parse_tool("thinking\nTOOL EXPLORE table0", &m), Some(Tool::Explore("table0".into())));
        assert_eq!(parse_tool("TOOL plan.", &m), Some(Tool::Plan));
        assert_eq!(parse_tool("TOOL PARTIAL_PLAN", &m), Some(Tool::PartialPlan));
        assert_eq!(
            parse_tool("**TOOL SUGGEST_ALTERNATIVE glass**", &m),
            Some(Tool::SuggestAlternative(ObjectClass::new("glass")))
        );
    }

    #[test]
    fn unusable_tool_lines_select_nothing() {
        let m = memory();
        assert_eq!(parse_tool("I would explore", &m), None);
        assert_eq!(parse_tool("TOOL EXPLORE kitchen9", &m), None);
        assert_eq!(parse_tool("TOOL EXPLORE", &m), None);
        assert_eq!(parse_tool("TOOL DANCE", &m), None);
    }
}
