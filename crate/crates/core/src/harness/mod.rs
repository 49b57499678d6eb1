//! Scenario files, success and minimality checks, suite evaluation, the
//! LLM-as-planner baseline and the interactive session.

mod baseline;
mod eval;
mod repl;
mod scenario;

pub use baseline::{baseline_llm_as_planner, baseline_prompt, BaselineVerdict};
pub use eval::{
    check_success, compute_minimality, evaluate_scenario, evaluate_suite, run_scenario, scenario_config,
    scenario_files, substitute_alternatives, Backend, EvalError, EvalReport, Minimality, Rates, ScenarioRow,
    Verdict,
};
pub use repl::{describe_step, Repl, Reply, HELP};
pub use scenario::{parse_script_text, Scenario, ScenarioError};
