//! Affordance-based task planning: symbolic scene model, dynamic PDDL
//! generation, goal validation, a cost-optimal planner, a symbolic
//! simulator and an LLM-driven tool-selection loop.

pub mod data;
pub mod harness;
pub mod model;
pub mod oam;
pub mod orchestrator;
pub mod pddl;
pub mod planner;
pub mod llm;
pub mod logic;
pub mod simulator;
pub mod suggest;
