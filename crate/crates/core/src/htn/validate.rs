//! Plan checking that shares nothing with the search: steps are re-executed
//! and every tree node is matched against the ground method tables.

use serde::Serialize;

use crate::hddl::{GroundFormula, GroundTables, State, TaskNetwork};

use super::Plan;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Valid,
    Invalid { step: Option<usize>, reason: String },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    fn at(step: usize, reason: impl Into<String>) -> Self {
        Verdict::Invalid { step: Some(step), reason: reason.into() }
    }

    fn tree(reason: impl Into<String>) -> Self {
        Verdict::Invalid { step: None, reason: reason.into() }
    }
}

struct TreeCheck<'a> {
    tables: &'a GroundTables,
    plan: &'a Plan,
    states: &'a [State],
    next_step: usize,
    seen: Vec<bool>,
}

impl TreeCheck<'_> {
    fn node(&mut self, id: usize) -> Result<(), Verdict> {
        let Some(n) = self.plan.decomposition.nodes.get(id) else {
            return Err(Verdict::tree(format!("tree refers to missing node {id}")));
        };
        if std::mem::replace(&mut self.seen[id], true) {
            return Err(Verdict::tree(format!("node {id} appears twice in the tree")));
        }
        if self.tables.is_primitive(&n.task.name) {
            let Some(s) = n.step else {
                return Err(Verdict::tree(format!("primitive node {id} {} has no step", n.task)));
            };
            if s != self.next_step || self.plan.steps.get(s).map(|st| &st.task) != Some(&n.task) {
                return Err(Verdict::tree(format!("leaf {id} {} does not match step {}", n.task, self.next_step)));
            }
            self.next_step += 1;
            return Ok(());
        }
        let Some(mref) = &n.method else {
            return Err(Verdict::tree(format!("compound node {id} {} was never decomposed", n.task)));
        };
        let Some(m) = self.tables.method(&mref.name, &mref.args) else {
            return Err(Verdict::tree(format!("node {id} uses unknown method {} {:?}", mref.name, mref.args)));
        };
        if m.task != n.task {
            return Err(Verdict::tree(format!("method {} decomposes {}, not {}", m.name, m.task, n.task)));
        }
        let children: Vec<_> = n.children.iter().filter_map(|&c| self.plan.decomposition.nodes.get(c)).map(|c| &c.task).collect();
        if children.len() != n.children.len() || children.into_iter().ne(m.subtasks.iter()) {
            return Err(Verdict::tree(format!("children of node {id} differ from the subtasks of {}", m.name)));
        }
        if !m.precondition.holds(&self.states[self.next_step.min(self.states.len() - 1)]) {
            return Err(Verdict::tree(format!("precondition of method {} fails before step {}", m.name, self.next_step)));
        }
        for &c in &n.children {
            self.node(c)?;
        }
        Ok(())
    }
}

/// Checks that `plan` executes from `s0`, refines `w0` through recorded
/// methods and, when given, reaches `goal`. Returns the first violation.
pub fn validate(tables: &GroundTables, s0: &State, w0: &TaskNetwork, plan: &Plan, goal: Option<&GroundFormula>) -> Verdict {
    let mut states = vec![s0.clone()];
    for (i, step) in plan.steps.iter().enumerate() {
        if step.index != i {
            return Verdict::at(i, format!("step at position {i} is numbered {}", step.index));
        }
        let Some(action) = tables.action(&step.task) else {
            return Verdict::at(i, format!("{} is not a ground action of the domain", step.task));
        };
        let s = states.last().unwrap();
        if !action.applicable(s) {
            return Verdict::at(i, format!("precondition of {} does not hold: {}", step.task, action.precondition));
        }
        let next = action.apply(s);
        states.push(next);
    }

    let roots: Vec<_> = plan.decomposition.roots.iter().filter_map(|&r| plan.decomposition.nodes.get(r)).map(|n| &n.task).collect();
    if roots.len() != plan.decomposition.roots.len() || roots.into_iter().ne(w0.tasks.iter()) {
        return Verdict::tree("decomposition roots do not match the initial task network");
    }
    let mut check = TreeCheck {
        tables,
        plan,
        states: &states,
        next_step: 0,
        seen: vec![false; plan.decomposition.nodes.len()],
    };
    for &r in &plan.decomposition.roots {
        if let Err(v) = check.node(r) {
            return v;
        }
    }
    if check.next_step < plan.steps.len() {
        return Verdict::at(check.next_step, format!("orphan step {}: not derived from the initial task network", check.next_step));
    }
    if let Some(g) = goal {
        if !g.holds(states.last().unwrap()) {
            return Verdict::tree(format!("goal {g} does not hold after the last step"));
        }
    }
    Verdict::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hddl::{parse_domain, parse_problem, TaskInstance};
    use crate::htn::{plan_problem, PlanStep, PlannerOptions};

    const DOMAIN: &str = "(define (domain v)
      (:types x)
      (:predicates (a ?o - x) (b ?o - x))
      (:task pair :parameters (?o - x))
      (:method m :parameters (?o - x) :task (pair ?o) :ordered-subtasks (and (one ?o) (two ?o)))
      (:action one :parameters (?o - x) :effect (a ?o))
      (:action two :parameters (?o - x) :precondition (a ?o) :effect (b ?o))
      (:action free :parameters (?o - x)))";

    fn setup() -> (GroundTables, Plan) {
        let d = parse_domain(DOMAIN).unwrap();
        let p = parse_problem("(define (problem p) (:domain v) (:objects o - x) (:htn :ordered-subtasks (pair o)))", &d).unwrap();
        plan_problem(&d, &p, &PlannerOptions::default()).unwrap()
    }

    fn check(t: &GroundTables, p: &Plan) -> Verdict {
        validate(t, &t.initial_state, &t.initial_network, p, t.goal.as_ref())
    }

    #[test]
    fn emitted_plan_is_valid() {
        let (t, p) = setup();
        assert_eq!(check(&t, &p), Verdict::Valid);
    }

    #[test]
    fn swapped_steps_break_at_the_precondition() {
        let (t, mut p) = setup();
        p.steps.swap(0, 1);
        p.steps[0].index = 0;
        p.steps[1].index = 1;
        match check(&t, &p) {
            Verdict::Invalid { step, reason } => {
                assert_eq!(step, Some(0));
                assert!(reason.contains("precondition"), "{reason}");
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn extra_step_is_an_orphan() {
        let (t, mut p) = setup();
        p.steps.push(PlanStep { index: 2, task: TaskInstance { name: "free".into(), args: vec!["o".into()] }, node: 99 });
        match check(&t, &p) {
            Verdict::Invalid { step, reason } => {
                assert_eq!(step, Some(2));
                assert!(reason.contains("orphan step"), "{reason}");
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn wrong_roots_are_reported() {
        let (t, p) = setup();
        let mut w0 = TaskNetwork::new();
        w0.push(TaskInstance { name: "free".into(), args: vec!["o".into()] });
        assert!(!validate(&t, &t.initial_state, &w0, &p, None).is_valid());
    }
}
