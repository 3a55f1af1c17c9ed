//! Grounding of action and method schemas over the problem's objects.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::ast::*;
use super::GroundError;

pub const DEFAULT_GROUNDING_CAP: u64 = 1_000_000;

/// A set of ground atoms.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct State(BTreeSet<GroundAtom>);

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        self.0.insert(atom)
    }

    pub fn remove(&mut self, atom: &GroundAtom) -> bool {
        self.0.remove(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundAtom> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<GroundAtom> for State {
    fn from_iter<I: IntoIterator<Item = GroundAtom>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GroundFormula {
    And(Vec<GroundFormula>),
    Not(Box<GroundFormula>),
    Atom(GroundAtom),
}

impl GroundFormula {
    pub fn holds(&self, state: &State) -> bool {
        match self {
            GroundFormula::And(fs) => fs.iter().all(|f| f.holds(state)),
            GroundFormula::Not(f) => !f.holds(state),
            GroundFormula::Atom(a) => state.contains(a),
        }
    }

    fn atoms<'a>(&'a self, out: &mut Vec<&'a GroundAtom>) {
        match self {
            GroundFormula::And(fs) => fs.iter().for_each(|f| f.atoms(out)),
            GroundFormula::Not(f) => f.atoms(out),
            GroundFormula::Atom(a) => out.push(a),
        }
    }
}

impl fmt::Display for GroundFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundFormula::And(fs) => {
                f.write_str("(and")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                f.write_str(")")
            }
            GroundFormula::Not(x) => write!(f, "(not {x})"),
            GroundFormula::Atom(a) => a.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundAction {
    pub task: TaskInstance,
    pub precondition: GroundFormula,
    pub add: Vec<GroundAtom>,
    pub del: Vec<GroundAtom>,
}

impl GroundAction {
    pub fn applicable(&self, state: &State) -> bool {
        self.precondition.holds(state)
    }

    /// Successor state: deletes first, then adds.
    pub fn apply(&self, state: &State) -> State {
        let mut next = state.clone();
        for d in &self.del {
            next.remove(d);
        }
        for a in &self.add {
            next.insert(a.clone());
        }
        next
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundMethod {
    pub name: String,
    pub args: Vec<String>,
    pub task: TaskInstance,
    pub precondition: GroundFormula,
    pub subtask_ids: Vec<String>,
    pub subtasks: Vec<TaskInstance>,
}

/// Ground actions and methods, indexed by task for the planner, together
/// with the problem's initial state, task network and goal.
#[derive(Debug, Clone)]
pub struct GroundTables {
    pub actions: Vec<GroundAction>,
    pub methods: Vec<GroundMethod>,
    pub initial_state: State,
    pub initial_network: TaskNetwork,
    pub goal: Option<GroundFormula>,
    action_index: HashMap<TaskInstance, usize>,
    methods_by_task: HashMap<TaskInstance, Vec<usize>>,
    method_index: HashMap<(String, Vec<String>), usize>,
    compound: HashSet<String>,
    primitive: HashSet<String>,
}

impl GroundTables {
    pub fn action(&self, task: &TaskInstance) -> Option<&GroundAction> {
        self.action_index.get(task).map(|&i| &self.actions[i])
    }

    /// Ground methods for `task`, in domain source order.
    pub fn methods_for(&self, task: &TaskInstance) -> impl Iterator<Item = &GroundMethod> {
        self.methods_by_task.get(task).into_iter().flatten().map(|&i| &self.methods[i])
    }

    pub fn method(&self, name: &str, args: &[String]) -> Option<&GroundMethod> {
        self.method_index.get(&(name.to_string(), args.to_vec())).map(|&i| &self.methods[i])
    }

    pub fn is_primitive(&self, task_name: &str) -> bool {
        self.primitive.contains(task_name)
    }

    pub fn is_compound(&self, task_name: &str) -> bool {
        self.compound.contains(task_name)
    }
}

struct Objects<'a> {
    domain: &'a DomainAst,
    all: Vec<(&'a str, &'a str)>,
    type_of: HashMap<&'a str, &'a str>,
}

impl<'a> Objects<'a> {
    fn new(domain: &'a DomainAst, problem: &'a ProblemAst) -> Self {
        let mut all = Vec::new();
        let mut type_of = HashMap::new();
        for o in domain.constants.iter().chain(&problem.objects) {
            if type_of.insert(o.name.as_str(), o.ty.as_str()).is_none() {
                all.push((o.name.as_str(), o.ty.as_str()));
            }
        }
        Self { domain, all, type_of }
    }

    fn of_type(&self, ty: &str) -> Vec<&'a str> {
        self.all.iter().filter(|(_, t)| self.domain.is_subtype(t, ty)).map(|(n, _)| *n).collect()
    }

    fn fits(&self, args: &[String], types: &[&str]) -> bool {
        args.iter().zip(types).all(|(a, t)| self.type_of.get(a.as_str()).is_some_and(|ot| self.domain.is_subtype(ot, t)))
    }

    fn atom_ok(&self, a: &GroundAtom) -> bool {
        self.domain.predicate(&a.predicate).is_some_and(|p| {
            let types: Vec<&str> = p.params.iter().map(|t| t.ty.as_str()).collect();
            self.fits(&a.args, &types)
        })
    }

    fn task_ok(&self, t: &TaskInstance) -> bool {
        self.domain.task_param_types(&t.name).is_some_and(|types| self.fits(&t.args, &types))
    }
}

type Binding<'a> = HashMap<&'a str, &'a str>;

fn bind(term: &Term, b: &Binding) -> String {
    match term {
        Term::Var(v) => b.get(v.as_str()).copied().unwrap_or(v).to_string(),
        Term::Const(c) => c.clone(),
    }
}

fn ground_atom(a: &Atom, b: &Binding) -> GroundAtom {
    GroundAtom { predicate: a.predicate.clone(), args: a.args.iter().map(|t| bind(t, b)).collect() }
}

fn ground_formula(f: &Formula, b: &Binding) -> GroundFormula {
    match f {
        Formula::And(fs) => GroundFormula::And(fs.iter().map(|x| ground_formula(x, b)).collect()),
        Formula::Not(x) => GroundFormula::Not(Box::new(ground_formula(x, b))),
        Formula::Atom(a) => GroundFormula::Atom(ground_atom(a, b)),
    }
}

/// Visits every tuple of the Cartesian product, last position fastest.
fn for_each_tuple<'a>(domains: &[Vec<&'a str>], mut visit: impl FnMut(&[&'a str])) {
    if domains.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; domains.len()];
    let mut tuple: Vec<&str> = domains.iter().map(|d| d[0]).collect();
    loop {
        visit(&tuple);
        let mut k = domains.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                tuple[k] = domains[k][idx[k]];
                break;
            }
            idx[k] = 0;
            tuple[k] = domains[k][0];
        }
    }
}

fn count(domains: &[Vec<&str>]) -> u128 {
    domains.iter().fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128))
}

pub fn ground(domain: &DomainAst, problem: &ProblemAst) -> Result<GroundTables, GroundError> {
    ground_with_cap(domain, problem, DEFAULT_GROUNDING_CAP)
}

pub fn ground_with_cap(domain: &DomainAst, problem: &ProblemAst, cap: u64) -> Result<GroundTables, GroundError> {
    if problem.domain != domain.name {
        return Err(GroundError::Invalid(format!(
            "problem is for domain '{}' but the domain is '{}'",
            problem.domain, domain.name
        )));
    }
    let objs = Objects::new(domain, problem);
    let param_domains = |params: &[Typed]| -> Vec<Vec<&str>> { params.iter().map(|p| objs.of_type(&p.ty)).collect() };

    let action_domains: Vec<_> = domain.actions.iter().map(|a| param_domains(&a.params)).collect();
    let method_domains: Vec<_> = domain.methods.iter().map(|m| param_domains(&m.params)).collect();
    let total = action_domains.iter().chain(&method_domains).fold(0u128, |acc, d| acc.saturating_add(count(d)));
    if total > cap as u128 {
        return Err(GroundError::Explosion { count: total, cap });
    }

    let mut actions = Vec::new();
    for (a, doms) in domain.actions.iter().zip(&action_domains) {
        for_each_tuple(doms, |tuple| {
            let b: Binding = a.params.iter().map(|p| p.name.as_str()).zip(tuple.iter().copied()).collect();
            let precondition = ground_formula(&a.precondition, &b);
            let mut add = Vec::new();
            let mut del = Vec::new();
            for l in &a.effects {
                let g = ground_atom(&l.atom, &b);
                if l.positive { add.push(g) } else { del.push(g) }
            }
            let mut atoms = Vec::new();
            precondition.atoms(&mut atoms);
            if atoms.into_iter().chain(&add).chain(&del).all(|x| objs.atom_ok(x)) {
                let task = TaskInstance { name: a.name.clone(), args: tuple.iter().map(|s| s.to_string()).collect() };
                actions.push(GroundAction { task, precondition, add, del });
            }
        });
    }

    let mut methods = Vec::new();
    for (m, doms) in domain.methods.iter().zip(&method_domains) {
        for_each_tuple(doms, |tuple| {
            let b: Binding = m.params.iter().map(|p| p.name.as_str()).zip(tuple.iter().copied()).collect();
            let task = TaskInstance { name: m.task.clone(), args: m.task_args.iter().map(|t| bind(t, &b)).collect() };
            let precondition = ground_formula(&m.precondition, &b);
            let subtasks: Vec<TaskInstance> = m
                .subtasks
                .iter()
                .map(|s| TaskInstance { name: s.task.clone(), args: s.args.iter().map(|t| bind(t, &b)).collect() })
                .collect();
            let mut atoms = Vec::new();
            precondition.atoms(&mut atoms);
            if objs.task_ok(&task) && subtasks.iter().all(|s| objs.task_ok(s)) && atoms.into_iter().all(|x| objs.atom_ok(x)) {
                methods.push(GroundMethod {
                    name: m.name.clone(),
                    args: tuple.iter().map(|s| s.to_string()).collect(),
                    task,
                    precondition,
                    subtask_ids: m.subtasks.iter().map(|s| s.id.clone()).collect(),
                    subtasks,
                });
            }
        });
    }

    let action_index = actions.iter().enumerate().map(|(i, a)| (a.task.clone(), i)).collect();
    let mut methods_by_task: HashMap<TaskInstance, Vec<usize>> = HashMap::new();
    let mut method_index = HashMap::new();
    for (i, m) in methods.iter().enumerate() {
        methods_by_task.entry(m.task.clone()).or_default().push(i);
        method_index.insert((m.name.clone(), m.args.clone()), i);
    }
    let empty = Binding::new();
    Ok(GroundTables {
        actions,
        methods,
        initial_state: problem.init.iter().cloned().collect(),
        initial_network: problem.htn.clone(),
        goal: problem.goal.as_ref().map(|g| ground_formula(g, &empty)),
        action_index,
        methods_by_task,
        method_index,
        compound: domain.tasks.iter().map(|t| t.name.clone()).collect(),
        primitive: domain.actions.iter().map(|a| a.name.clone()).collect(),
    })
}
