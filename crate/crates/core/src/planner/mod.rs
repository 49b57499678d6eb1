//! Grounding, cost-optimal forward search, a brute-force oracle and an
//! adapter for external PDDL planners.

mod external;
mod ground;
mod oracle;
mod search;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{Atom, Formula};

pub use external::{external_plan, parse_plan_output, ExternalError, ExternalPlanner, ENABLE_ENV};
pub use ground::{ground_actions, ground_actions_with_limit, DEFAULT_GROUNDING_LIMIT};
pub use oracle::{oracle_plan, OracleError, OracleMetric};
pub use search::plan;

/// Closed-world state: the set of true ground atoms.
pub type State = BTreeSet<Atom>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    pub agent: String,
    /// Agent first, then the capability's own arguments.
    pub args: Vec<String>,
    pub precondition: Formula,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
    pub cost: u64,
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name, self.args.join(" "))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<GroundAction>,
    pub total_cost: u64,
    pub length: usize,
}

impl Plan {
    pub fn new(steps: Vec<GroundAction>) -> Self {
        let total_cost = steps.iter().map(|s| s.cost).sum();
        let length = steps.len();
        Plan {
            steps,
            total_cost,
            length,
        }
    }

    pub fn empty() -> Self {
        Plan::default()
    }

    /// One `name args` line per step.
    pub fn lines(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.to_string()).collect()
    }
}

/// Cooperative cancellation flag shared with a running search.
#[derive(Clone, Debug, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Clone, Debug)]
pub struct PlanLimits {
    pub timeout: Duration,
    pub max_nodes: usize,
    pub grounding_limit: usize,
    pub cancel: Option<CancelToken>,
}

impl Default for PlanLimits {
    fn default() -> Self {
        PlanLimits {
            timeout: Duration::from_secs(300),
            max_nodes: 5_000_000,
            grounding_limit: DEFAULT_GROUNDING_LIMIT,
            cancel: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlannerError {
    #[error("the goal is unreachable from the current state")]
    Unsolvable,
    #[error("grounding exceeded {limit} actions")]
    GroundingLimit { limit: usize },
    #[error("search stopped ({reason}) after expanding {expanded} states, best cost reached {best_g}")]
    ResourceExhausted {
        reason: String,
        expanded: usize,
        best_g: u64,
    },
    #[error("{0}")]
    Invalid(String),
}
