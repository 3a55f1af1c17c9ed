//! Syntax tree for the totally ordered HDDL subset.

use std::fmt;

use serde::Serialize;

use super::lexer::Pos;

/// Source position of a node. Positions never take part in equality, so two
/// trees compare equal when their structure does.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Span(pub Pos);

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeDecl {
    pub name: String,
    pub parent: String,
    pub span: Span,
}

/// A variable or object with its declared type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Typed {
    pub name: String,
    pub ty: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signature {
    pub name: String,
    pub params: Vec<Typed>,
    pub span: Span,
}

impl Signature {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Formula {
    /// Conjunction; the empty conjunction is true.
    And(Vec<Formula>),
    Not(Box<Formula>),
    Atom(Atom),
}

impl Formula {
    pub fn truth() -> Self {
        Formula::And(Vec::new())
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::And(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Not(f) => f.collect_atoms(out),
            Formula::Atom(a) => out.push(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionAst {
    pub name: String,
    pub params: Vec<Typed>,
    pub precondition: Formula,
    pub effects: Vec<Literal>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subtask {
    pub id: String,
    pub task: String,
    pub args: Vec<Term>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodAst {
    pub name: String,
    pub params: Vec<Typed>,
    pub task: String,
    pub task_args: Vec<Term>,
    pub precondition: Formula,
    pub subtasks: Vec<Subtask>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainAst {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub constants: Vec<Typed>,
    pub predicates: Vec<Signature>,
    /// Compound task declarations.
    pub tasks: Vec<Signature>,
    pub actions: Vec<ActionAst>,
    pub methods: Vec<MethodAst>,
    pub span: Span,
}

impl DomainAst {
    /// Size of the task set: compound tasks plus primitive task symbols.
    pub fn task_count(&self) -> usize {
        self.tasks.len() + self.actions.len()
    }

    pub fn predicate(&self, name: &str) -> Option<&Signature> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn compound_task(&self, name: &str) -> Option<&Signature> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionAst> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// Parameter types of a task symbol, compound or primitive.
    pub fn task_param_types(&self, name: &str) -> Option<Vec<&str>> {
        if let Some(t) = self.compound_task(name) {
            return Some(t.params.iter().map(|p| p.ty.as_str()).collect());
        }
        self.action(name).map(|a| a.params.iter().map(|p| p.ty.as_str()).collect())
    }

    pub fn is_type_declared(&self, ty: &str) -> bool {
        ty == "object" || self.types.iter().any(|t| t.name == ty)
    }

    /// `true` when `sub` equals `sup` or descends from it.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let mut cur = sub;
        for _ in 0..=self.types.len() {
            if cur == sup {
                return true;
            }
            match self.types.iter().find(|t| t.name == cur) {
                Some(t) => cur = &t.parent,
                None => return false,
            }
        }
        false
    }
}

/// A task occurrence in a network: a task symbol with ground arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
pub struct TaskInstance {
    pub name: String,
    pub args: Vec<String>,
}

impl fmt::Display for TaskInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// Totally ordered task network: list position is the order.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TaskNetwork {
    pub identifiers: Vec<String>,
    pub tasks: Vec<TaskInstance>,
}

impl TaskNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a task under a fresh identifier.
    pub fn push(&mut self, task: TaskInstance) -> &str {
        let mut i = self.tasks.len();
        let id = loop {
            let candidate = format!("task{i}");
            if !self.identifiers.contains(&candidate) {
                break candidate;
            }
            i += 1;
        };
        self.identifiers.push(id);
        self.tasks.push(task);
        self.identifiers.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn alpha(&self, id: &str) -> Option<&TaskInstance> {
        self.identifiers.iter().position(|i| i == id).map(|k| &self.tasks[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TaskInstance)> {
        self.identifiers.iter().map(String::as_str).zip(&self.tasks)
    }
}

/// Ground atom, the building block of states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        Self { predicate: predicate.to_string(), args: args.iter().map(|s| s.to_string()).collect() }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemAst {
    pub name: String,
    pub domain: String,
    pub objects: Vec<Typed>,
    pub htn: TaskNetwork,
    pub init: Vec<GroundAtom>,
    pub goal: Option<Formula>,
    pub span: Span,
}
