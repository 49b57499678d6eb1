use super::eval::scenario_config;
use super::scenario::Scenario;
use crate::llm::LlmHandle;
use crate::model::{verbalize_memory, Memory};
use crate::orchestrator::{run, OrchestratorConfig};
use crate::planner::GroundAction;
use crate::pddl::CapabilityLibrary;
use crate::simulator::state_of;

/// Interactive session over one world; memory persists between tasks.
pub struct Repl {
    scenario: Scenario,
    memory: Memory,
    config: OrchestratorConfig,
    llm: LlmHandle,
}

pub struct Reply {
    pub text: String,
    pub quit: bool,
}

impl Reply {
    fn text(text: impl Into<String>) -> Self {
        Reply {
            text: text.into(),
            quit: false,
        }
    }
}

pub const HELP: &str = "Type a task, or :state, :memory, :reset, :help, :quit";

/// Natural-language rendering of one plan step from its capability text.
pub fn describe_step(library: &CapabilityLibrary, step: &GroundAction) -> String {
    library
        .capability(&step.name)
        .map(|c| c.describe(&step.args))
        .unwrap_or_else(|| step.to_string())
}

impl Repl {
    pub fn new(scenario: Scenario, llm: LlmHandle, base: &OrchestratorConfig) -> Result<Self, String> {
        let memory = scenario.initial_memory().map_err(|e| e.to_string())?;
        let config = scenario_config(&scenario, base);
        Ok(Repl {
            scenario,
            memory,
            config,
            llm,
        })
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    pub fn handle(&mut self, line: &str) -> Reply {
        let line = line.trim();
        match line {
            "" => Reply::text(""),
            ":quit" | ":q" | ":exit" => Reply {
                text: String::new(),
                quit: true,
            },
            ":help" => Reply::text(HELP),
            ":state" => {
                let lines: Vec<String> = state_of(&self.memory).iter().map(|a| a.to_plain()).collect();
                Reply::text(if lines.is_empty() { "(empty state)".to_string() } else { lines.join("\n") })
            }
            ":memory" => Reply::text(verbalize_memory(&self.memory, &self.scenario.agents)),
            ":reset" => match self.scenario.initial_memory() {
                Ok(m) => {
                    self.memory = m;
                    Reply::text("memory reset")
                }
                Err(e) => Reply::text(format!("cannot reset: {e}")),
            },
            l if l.starts_with(':') => Reply::text(format!("unknown command '{l}'. {HELP}")),
            task => {
                let outcome = run(
                    task,
                    self.memory.clone(),
                    &self.scenario.world(),
                    &self.scenario.agents,
                    &self.config,
                    &self.llm,
                );
                let mut out = String::from("Tools:\n");
                for (tool, rec) in outcome.trace.iter().zip(&outcome.records) {
                    out.push_str(&format!("  {tool}: {}\n", rec.note));
                }
                if !outcome.plans.is_empty() {
                    out.push_str("Plan:\n");
                    for step in outcome.plans.iter().flat_map(|p| p.steps.iter()) {
                        out.push_str(&format!("  {step}  ({})\n", describe_step(&self.config.library, step)));
                    }
                }
                out.push_str(&format!("Status: {}", outcome.status));
                if let Some(e) = &outcome.error {
                    out.push_str(&format!(" ({e})"));
                }
                self.memory = outcome.memory;
                Reply::text(out)
            }
        }
    }
}
