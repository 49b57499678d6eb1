//! Typed PDDL subset: model, reader, printer and the affordance-driven
//! domain/problem generator.

mod capability;
mod domain;
mod formula;
mod goal;
mod problem;
mod reader;
mod render;
pub mod sexpr;
mod types;

use thiserror::Error;

pub use capability::{Capability, CapabilityLibrary, PredicateDecl, TypedParam, AGENT_VAR, EQUALITY};
pub use domain::{build_domain, build_type_hierarchy, ActionSchema, Domain, DOMAIN_NAME};
pub use formula::{is_variable, Atom, Formula, Literal};
pub use goal::{parse_formula, SyntaxError};
pub use problem::{build_problem_init, ProblemSkeleton, AT};
pub use reader::{parse_domain, parse_plain_formula, parse_problem};
pub use render::{render_domain, render_problem, render_skeleton};
pub use types::{capability_type, TypeTree, AGENT, HAND, LOCATION, OBJECT};

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PddlError {
    #[error("unknown type '{0}'")]
    UnknownType(String),
    #[error("type conflict: {0}")]
    TypeConflict(String),
    #[error("object class '{0}' has no affordances and cannot be typed")]
    EmptyAffordances(String),
    #[error("{context} uses undeclared predicate '{name}'")]
    UnknownPredicate { context: String, name: String },
    #[error("unknown entity '{0}'")]
    UnknownEntity(String),
    #[error("a problem needs a non-empty goal")]
    EmptyGoal,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sexpr(#[from] sexpr::SexprError),
}
