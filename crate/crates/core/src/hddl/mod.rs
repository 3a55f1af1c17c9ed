//! HDDL front end: a totally ordered HDDL 1.0 subset, parsed into a typed
//! syntax tree and grounded into tables for the planner.

mod ast;
mod ground;
mod lexer;
mod parser;
mod print;

use thiserror::Error;

pub use ast::{
    ActionAst, Atom, DomainAst, Formula, GroundAtom, Literal, MethodAst, ProblemAst, Signature, Span, Subtask,
    TaskInstance, TaskNetwork, Term, TypeDecl, Typed,
};
pub use ground::{
    ground, ground_with_cap, GroundAction, GroundFormula, GroundMethod, GroundTables, State, DEFAULT_GROUNDING_CAP,
};
pub use lexer::Pos;
pub use parser::{parse_domain, parse_problem, SUPPORTED_REQUIREMENTS};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Self { pos, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundError {
    #[error("grounding would create {count} instances, above the cap of {cap}")]
    Explosion { count: u128, cap: u64 },
    #[error("{0}")]
    Invalid(String),
}
