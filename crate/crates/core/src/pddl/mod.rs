//! STRIPS + `:typing` subset of PDDL: domains, problems, plan files and
//! grounding.

mod atom;
mod domain;
mod plan;
mod problem;
pub(crate) mod sexpr;
mod task;

pub use atom::{Atom, State};
pub use domain::{parse_domain, ActionSchema, AtomTemplate, DomainModel, PredicateDecl, Term, TypedName};
pub use plan::{parse_plan, GroundAction, Grounding, Plan, Resolution, Unresolvable};
pub use problem::{parse_problem, ProblemModel};
pub use task::Task;

/// Root type every declared type descends from.
pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("unsupported PDDL feature: {0}")]
    UnsupportedFeature(String),
    #[error("undeclared {kind} `{name}`")]
    UndeclaredSymbol { kind: &'static str, name: String },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("problem is for domain `{found}`, expected `{expected}`")]
    DomainMismatch { expected: String, found: String },
    #[error("`{name}` takes {expected} argument(s), got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`{object}` is not of type `{expected}`")]
    TypeMismatch { object: String, expected: String },
    #[error("line {line}: no action could be read")]
    MalformedLine { line: usize },
}
