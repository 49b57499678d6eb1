use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::scenario::{Scenario, ScenarioError};
use crate::llm::{HttpConfig, LlmHandle};
use crate::model::{Memory, ObjectClass, ObjectInstance};
use crate::orchestrator::{build_task, run, LoopOutcome, LoopStatus, OrchestratorConfig};
use crate::pddl::{Atom, Formula};
use crate::planner::{oracle_plan, OracleMetric};
use crate::simulator::{goal_satisfied, state_of};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no scenarios found in {0}")]
    EmptySuite(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Scenario {
        path: String,
        #[source]
        source: ScenarioError,
    },
    #[error("cannot set up the LLM backend: {0}")]
    Backend(String),
}

/// Where LLM answers come from during evaluation.
#[derive(Clone, Debug)]
pub enum Backend {
    /// Each scenario's own `[SCRIPT]`.
    Scripted,
    Http(HttpConfig),
}

impl Backend {
    pub fn handle_for(&self, scenario: &Scenario) -> Result<LlmHandle, EvalError> {
        match self {
            Backend::Scripted => Ok(LlmHandle::scripted(scenario.script.clone())),
            Backend::Http(cfg) => LlmHandle::http(cfg.clone()).map_err(|e| EvalError::Backend(e.to_string())),
        }
    }
}

/// Rewrites arguments naming instances of a missing class into a
/// disjunction over the instances of its recorded alternative.
pub fn substitute_alternatives(
    goal: &Formula,
    alternatives: &BTreeMap<ObjectClass, ObjectClass>,
    instances: &BTreeSet<String>,
) -> Formula {
    goal.map_atoms(&mut |atom: &Atom| {
        let options: Vec<Vec<String>> = atom
            .args
            .iter()
            .map(|arg| {
                let alt = ObjectInstance::parse(arg)
                    .ok()
                    .filter(|_| !instances.contains(arg))
                    .and_then(|i| alternatives.get(&i.class));
                match alt {
                    Some(alt) => instances
                        .iter()
                        .filter(|n| ObjectInstance::parse(n).is_ok_and(|i| &i.class == alt))
                        .cloned()
                        .collect(),
                    None => vec![arg.clone()],
                }
            })
            .collect();
        let mut combos: Vec<Vec<String>> = vec![Vec::new()];
        for opts in &options {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    opts.iter().map(move |o| {
                        let mut c = c.clone();
                        c.push(o.clone());
                        c
                    })
                })
                .collect();
        }
        let mut atoms: Vec<Formula> = combos
            .into_iter()
            .map(|args| Formula::Atom(Atom::new(atom.predicate.as_str(), args)))
            .collect();
        if atoms.len() == 1 {
            atoms.pop().expect("one atom")
        } else {
            Formula::Or(atoms)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Verdict {
    fn fail(reason: impl Into<String>) -> Self {
        Verdict {
            success: false,
            reason: Some(reason.into()),
        }
    }
}

/// Success needs a successful loop, only permitted substitutions and the
/// reference goal (with substitutions applied) holding in the final state.
pub fn check_success(scenario: &Scenario, outcome: &LoopOutcome) -> Verdict {
    if outcome.status != LoopStatus::Success {
        return Verdict::fail(format!("loop ended with status {}", outcome.status));
    }
    for (missing, alt) in &outcome.memory.alternatives {
        if let Some(allowed) = scenario.alternatives.get(missing) {
            if !allowed.contains(alt) {
                return Verdict::fail(format!("substitution {missing} -> {alt} is not permitted"));
            }
        }
    }
    let goal = substitute_alternatives(
        &scenario.goal,
        &outcome.memory.alternatives,
        &outcome.memory.scene.instance_names(),
    );
    if !goal_satisfied(&state_of(&outcome.memory), &goal) {
        return Verdict::fail(format!("the final state does not satisfy {}", goal.to_pddl()));
    }
    Verdict {
        success: true,
        reason: None,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Minimality {
    /// `None` when the oracle could not decide.
    pub plan_minimal: Option<bool>,
    pub optimal_length: Option<usize>,
    /// `None` when the scenario has no annotated optimum.
    pub tools_minimal: Option<bool>,
}

/// Compares the executed plan length with the shortest plan for the
/// reference goal on the fully revealed world (agents where they stood
/// before the first plan), and the tool count with the annotation.
pub fn compute_minimality(scenario: &Scenario, outcome: &LoopOutcome, config: &OrchestratorConfig) -> Minimality {
    let tools_minimal = scenario.optimal_tools.map(|n| outcome.tool_count() == n);
    let length = outcome.plan_length();
    let positions = outcome
        .plan_start
        .clone()
        .unwrap_or_else(|| scenario.agent_starts.clone());
    let oracle = || -> Result<usize, String> {
        let memory: Memory = scenario.revealed_memory(positions).map_err(|e| e.to_string())?;
        let (domain, sk) = build_task(&memory, &scenario.agents, config).map_err(|e| e.to_string())?;
        let goal = substitute_alternatives(
            &scenario.goal,
            &outcome.memory.alternatives,
            &memory.scene.instance_names(),
        );
        oracle_plan(&domain, &sk, &goal, length, OracleMetric::Length)
            .map(|p| p.length)
            .map_err(|e| e.to_string())
    };
    match oracle() {
        Ok(optimal) => Minimality {
            plan_minimal: Some(length == optimal),
            optimal_length: Some(optimal),
            tools_minimal,
        },
        Err(e) => {
            log::warn!("{}: plan minimality unknown: {e}", scenario.id);
            Minimality {
                plan_minimal: None,
                optimal_length: None,
                tools_minimal,
            }
        }
    }
}

/// Per-scenario configuration: the scenario's OAM overrides apply.
pub fn scenario_config(scenario: &Scenario, base: &OrchestratorConfig) -> OrchestratorConfig {
    let mut config = base.clone();
    config.oam.overlay(&scenario.oam);
    config
}

pub fn run_scenario(scenario: &Scenario, llm: &LlmHandle, base: &OrchestratorConfig) -> Result<LoopOutcome, String> {
    let memory = scenario.initial_memory().map_err(|e| e.to_string())?;
    let config = scenario_config(scenario, base);
    Ok(run(&scenario.task, memory, &scenario.world(), &scenario.agents, &config, llm))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub id: String,
    pub subset: String,
    pub status: String,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub plan_length: usize,
    pub optimal_length: Option<usize>,
    pub plan_minimal: Option<bool>,
    pub tool_count: usize,
    pub optimal_tools: Option<usize>,
    pub tools_minimal: Option<bool>,
    pub tools: Vec<String>,
    pub plan: Vec<String>,
    #[serde(skip)]
    pub elapsed_ms: u128,
}

pub fn evaluate_scenario(scenario: &Scenario, backend: &Backend, base: &OrchestratorConfig) -> ScenarioRow {
    let started = Instant::now();
    let mut row = ScenarioRow {
        id: scenario.id.clone(),
        subset: scenario.subset.clone().unwrap_or_else(|| "default".into()),
        status: "error".into(),
        success: false,
        reason: None,
        plan_length: 0,
        optimal_length: None,
        plan_minimal: None,
        tool_count: 0,
        optimal_tools: scenario.optimal_tools,
        tools_minimal: None,
        tools: Vec::new(),
        plan: Vec::new(),
        elapsed_ms: 0,
    };
    let outcome = backend
        .handle_for(scenario)
        .map_err(|e| e.to_string())
        .and_then(|llm| run_scenario(scenario, &llm, base));
    match outcome {
        Err(e) => row.reason = Some(e),
        Ok(outcome) => {
            let verdict = check_success(scenario, &outcome);
            row.status = outcome.status.to_string();
            row.success = verdict.success;
            row.reason = verdict.reason.or(outcome.error.clone());
            row.plan_length = outcome.plan_length();
            row.tool_count = outcome.tool_count();
            row.tools = outcome.trace.iter().map(ToString::to_string).collect();
            row.plan = outcome.plans.iter().flat_map(|p| p.lines()).collect();
            if verdict.success {
                let m = compute_minimality(scenario, &outcome, &scenario_config(scenario, base));
                row.optimal_length = m.optimal_length;
                row.plan_minimal = m.plan_minimal;
                row.tools_minimal = m.tools_minimal;
            }
        }
    }
    row.elapsed_ms = started.elapsed().as_millis();
    row
}

/// The three rates over a group of rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rates {
    pub scenarios: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Minimal plans among successes with a known optimum.
    pub minimal_plan_rate: f64,
    /// Minimal plans over all scenarios.
    pub minimal_plan_rate_all: f64,
    /// Tool-minimal runs among successes with an annotated optimum.
    pub minimal_tools_rate: f64,
}

fn rate(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

impl Rates {
    pub fn of(rows: &[&ScenarioRow]) -> Self {
        let successes: Vec<&&ScenarioRow> = rows.iter().filter(|r| r.success).collect();
        let plan_known: Vec<bool> = successes.iter().filter_map(|r| r.plan_minimal).collect();
        let plan_min = plan_known.iter().filter(|b| **b).count();
        let tools_known: Vec<bool> = successes.iter().filter_map(|r| r.tools_minimal).collect();
        Rates {
            scenarios: rows.len(),
            successes: successes.len(),
            success_rate: rate(successes.len(), rows.len()),
            minimal_plan_rate: rate(plan_min, plan_known.len()),
            minimal_plan_rate_all: rate(plan_min, rows.len()),
            minimal_tools_rate: rate(tools_known.iter().filter(|b| **b).count(), tools_known.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<ScenarioRow>,
    pub subsets: BTreeMap<String, Rates>,
    pub overall: Rates,
    #[serde(skip)]
    pub elapsed_ms: u128,
}

impl EvalReport {
    pub fn from_rows(rows: Vec<ScenarioRow>, elapsed_ms: u128) -> Self {
        let mut groups: BTreeMap<String, Vec<&ScenarioRow>> = BTreeMap::new();
        for r in &rows {
            groups.entry(r.subset.clone()).or_default().push(r);
        }
        let subsets = groups.iter().map(|(k, v)| (k.clone(), Rates::of(v))).collect();
        let overall = Rates::of(&rows.iter().collect::<Vec<_>>());
        EvalReport {
            rows,
            subsets,
            overall,
            elapsed_ms,
        }
    }

    /// Console table: one line per scenario, then the rates.
    pub fn table(&self) -> String {
        let yn = |b: Option<bool>| match b {
            Some(true) => "yes",
            Some(false) => "no",
            None => "-",
        };
        let idw = self.rows.iter().map(|r| r.id.len()).max().unwrap_or(0).max("scenario".len());
        let subw = self
            .rows
            .iter()
            .map(|r| r.subset.len())
            .chain(self.subsets.keys().map(String::len))
            .max()
            .unwrap_or(0)
            .max("overall".len());
        let mut out = format!(
            "{:<idw$} {:<subw$} {:<18} {:>4} {:>4} {:>4} {:>5} {:>5}\n",
            "scenario", "subset", "status", "ok", "len", "opt", "tools", "min-t"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<idw$} {:<subw$} {:<18} {:>4} {:>4} {:>4} {:>5} {:>5}\n",
                r.id,
                r.subset,
                r.status,
                if r.success { "yes" } else { "no" },
                r.plan_length,
                r.optimal_length.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                r.tool_count,
                yn(r.tools_minimal),
            ));
        }
        out.push_str(&format!(
            "\n{:<subw$} {:>6} {:>8} {:>10} {:>10} {:>10}\n",
            "subset", "n", "success", "min-plan", "min-plan*", "min-tools"
        ));
        let mut line = |name: &str, r: &Rates| {
            out.push_str(&format!(
                "{:<subw$} {:>6} {:>8.2} {:>10.2} {:>10.2} {:>10.2}\n",
                name, r.scenarios, r.success_rate, r.minimal_plan_rate, r.minimal_plan_rate_all, r.minimal_tools_rate
            ));
        };
        for (name, r) in &self.subsets {
            line(name, r);
        }
        line("overall", &self.overall);
        out.push_str("min-plan: among successes; min-plan*: over all scenarios\n");
        out
    }
}

/// Scenario files (`*.scn`) of a directory in name order.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let io = |source| EvalError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every scenario of `dir` (optionally one subset) on up to `jobs`
/// threads. A scenario that fails to load or run becomes a failed row.
pub fn evaluate_suite(
    dir: &Path,
    subset: Option<&str>,
    backend: &Backend,
    base: &OrchestratorConfig,
    jobs: usize,
) -> Result<EvalReport, EvalError> {
    let started = Instant::now();
    let files = scenario_files(dir)?;
    let mut work: Vec<Result<Scenario, (String, String)>> = Vec::new();
    for f in files {
        match Scenario::load(&f) {
            Ok(s) if subset.is_none_or(|want| s.subset.as_deref().unwrap_or("default") == want) => work.push(Ok(s)),
            Ok(_) => {}
            Err(e) => {
                let id = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                work.push(Err((id, e.to_string())));
            }
        }
    }
    if work.is_empty() {
        return Err(EvalError::EmptySuite(dir.display().to_string()));
    }
    let eval_one = |w: &Result<Scenario, (String, String)>| match w {
        Ok(s) => evaluate_scenario(s, backend, base),
        Err((id, e)) => ScenarioRow {
            id: id.clone(),
            subset: "default".into(),
            status: "load-error".into(),
            success: false,
            reason: Some(e.clone()),
            plan_length: 0,
            optimal_length: None,
            plan_minimal: None,
            tool_count: 0,
            optimal_tools: None,
            tools_minimal: None,
            tools: Vec::new(),
            plan: Vec::new(),
            elapsed_ms: 0,
        },
    };
    let jobs = jobs.max(1);
    let rows: Vec<ScenarioRow> = if jobs == 1 {
        work.iter().map(eval_one).collect()
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let out: Vec<std::sync::Mutex<Option<ScenarioRow>>> = work.iter().map(|_| Default::default()).collect();
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(work.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= work.len() {
                        break;
                    }
                    *out[i].lock().expect("row lock") = Some(eval_one(&work[i]));
                });
            }
        });
        out.into_iter()
            .map(|m| m.into_inner().expect("row lock").expect("every scenario ran"))
            .collect()
    };
    Ok(EvalReport::from_rows(rows, started.elapsed().as_millis()))
}
