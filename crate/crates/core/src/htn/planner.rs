//! Depth-first forward decomposition with methods tried in source order.

use crate::hddl::{ground_with_cap, DomainAst, GroundFormula, GroundTables, ProblemAst, State, TaskInstance, TaskNetwork};

use super::{Decomposition, MethodRef, Plan, PlanError, PlanStats, PlanStep, TreeNode};

pub const DEFAULT_DEPTH_BOUND: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerOptions {
    /// Maximum number of decompositions along one search branch.
    pub depth_bound: usize,
    pub grounding_cap: u64,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        Self { depth_bound: DEFAULT_DEPTH_BOUND, grounding_cap: crate::hddl::DEFAULT_GROUNDING_CAP }
    }
}

#[derive(Clone)]
struct SearchNode {
    state: State,
    /// Remaining tasks, front of the agenda last, each with its tree node.
    agenda: Vec<(TaskInstance, usize)>,
    steps: Vec<PlanStep>,
    tree: Vec<TreeNode>,
    depth: usize,
}

fn leaf(tree: &mut Vec<TreeNode>, task: TaskInstance) -> usize {
    let id = tree.len();
    tree.push(TreeNode { id, task, method: None, children: Vec::new(), step: None });
    id
}

/// Searches for a primitive plan refining `w0` from `s0`. When `goal` is
/// given it must hold after the last step.
pub fn plan(
    tables: &GroundTables,
    s0: &State,
    w0: &TaskNetwork,
    goal: Option<&GroundFormula>,
    options: &PlannerOptions,
) -> Result<Plan, PlanError> {
    let mut tree = Vec::new();
    let roots: Vec<usize> = w0.tasks.iter().map(|t| leaf(&mut tree, t.clone())).collect();
    let agenda = roots.iter().rev().map(|&id| (tree[id].task.clone(), id)).collect();
    let mut stack = vec![SearchNode { state: s0.clone(), agenda, steps: Vec::new(), tree, depth: 0 }];
    let mut stats = PlanStats::default();
    let mut hit_bound = false;

    'search: while let Some(mut node) = stack.pop() {
        stats.nodes_expanded += 1;
        loop {
            let Some((task, id)) = node.agenda.pop() else {
                if goal.is_none_or(|g| g.holds(&node.state)) {
                    return Ok(Plan {
                        steps: node.steps,
                        decomposition: Decomposition { roots, nodes: node.tree },
                        stats,
                    });
                }
                stats.backtracks += 1;
                continue 'search;
            };
            if tables.is_primitive(&task.name) {
                match tables.action(&task) {
                    Some(a) if a.applicable(&node.state) => {
                        node.state = a.apply(&node.state);
                        let index = node.steps.len();
                        node.tree[id].step = Some(index);
                        node.steps.push(PlanStep { index, task, node: id });
                    }
                    _ => {
                        stats.backtracks += 1;
                        continue 'search;
                    }
                }
                continue;
            }
            let applicable: Vec<_> = tables.methods_for(&task).filter(|m| m.precondition.holds(&node.state)).collect();
            if applicable.is_empty() {
                stats.backtracks += 1;
                continue 'search;
            }
            if node.depth >= options.depth_bound {
                hit_bound = true;
                stats.backtracks += 1;
                continue 'search;
            }
            for m in applicable.into_iter().rev() {
                stats.decompositions += 1;
                let mut child = node.clone();
                child.depth += 1;
                child.tree[id].method = Some(MethodRef { name: m.name.clone(), args: m.args.clone() });
                let kids: Vec<usize> = m.subtasks.iter().map(|s| leaf(&mut child.tree, s.clone())).collect();
                for &k in kids.iter().rev() {
                    child.agenda.push((child.tree[k].task.clone(), k));
                }
                child.tree[id].children = kids;
                stack.push(child);
            }
            continue 'search;
        }
    }
    if hit_bound {
        Err(PlanError::DepthBound { bound: options.depth_bound, stats })
    } else {
        Err(PlanError::Unsolvable { reason: "search space exhausted".into(), stats })
    }
}

/// Grounds `problem` and plans from its own initial state and task network.
pub fn plan_problem(domain: &DomainAst, problem: &ProblemAst, options: &PlannerOptions) -> Result<(GroundTables, Plan), PlanError> {
    let tables = ground_with_cap(domain, problem, options.grounding_cap)?;
    let p = plan(&tables, &tables.initial_state, &tables.initial_network, tables.goal.as_ref(), options)?;
    Ok((tables, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hddl::{parse_domain, parse_problem};

    const DOMAIN: &str = "(define (domain t)
      (:requirements :typing :hierarchy :negative-preconditions :method-preconditions)
      (:types x)
      (:predicates (ready ?a - x) (done ?a - x) (used-b ?a - x))
      (:task top :parameters (?a - x))
      (:task loop :parameters (?a - x))
      (:method first :parameters (?a - x) :task (top ?a) :precondition (ready ?a)
        :ordered-subtasks (and (s1 (prep ?a)) (s2 (finish ?a))))
      (:method second :parameters (?a - x) :task (top ?a)
        :ordered-subtasks (b ?a))
      (:method spin :parameters (?a - x) :task (loop ?a) :ordered-subtasks (loop ?a))
      (:action prep :parameters (?a - x) :precondition (ready ?a) :effect (not (ready ?a)))
      (:action finish :parameters (?a - x) :effect (done ?a))
      (:action b :parameters (?a - x) :effect (used-b ?a)))";

    fn run(init: &str, htn: &str) -> Result<Plan, PlanError> {
        let d = parse_domain(DOMAIN).unwrap();
        let p = parse_problem(
            &format!("(define (problem p) (:domain t) (:objects o - x) (:htn :ordered-subtasks {htn}) (:init {init}))"),
            &d,
        )
        .unwrap();
        plan_problem(&d, &p, &PlannerOptions { depth_bound: 50, ..Default::default() }).map(|(_, p)| p)
    }

    fn names(p: &Plan) -> Vec<&str> {
        p.steps.iter().map(|s| s.task.name.as_str()).collect()
    }

    #[test]
    fn single_primitive() {
        assert_eq!(names(&run("", "(finish o)").unwrap()), vec!["finish"]);
    }

    #[test]
    fn forced_decomposition_keeps_method_order() {
        let p = run("(ready o)", "(top o)").unwrap();
        assert_eq!(names(&p), vec!["prep", "finish"]);
        let root = &p.decomposition.nodes[p.decomposition.roots[0]];
        assert_eq!(root.method.as_ref().unwrap().name, "first");
        assert_eq!(p.decomposition.step_range(root.id), (0, 2));
    }

    #[test]
    fn falls_back_to_later_method() {
        assert_eq!(names(&run("", "(top o)").unwrap()), vec!["b"]);
    }

    #[test]
    fn inapplicable_primitive_is_unsolvable() {
        assert!(matches!(run("", "(prep o)"), Err(PlanError::Unsolvable { .. })));
    }

    #[test]
    fn recursion_hits_depth_bound() {
        assert!(matches!(run("", "(loop o)"), Err(PlanError::DepthBound { bound: 50, .. })));
    }

    #[test]
    fn empty_network_gives_empty_plan() {
        assert!(run("", "()").unwrap().is_empty());
    }

    #[test]
    fn deterministic() {
        assert_eq!(run("(ready o)", "(and (top o) (top o))").unwrap(), run("(ready o)", "(and (top o) (top o))").unwrap());
    }
}
