//! Totally ordered HTN planning by depth-first forward decomposition, and an
//! independent plan validator.

mod planner;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hddl::TaskInstance;

pub use planner::{plan, plan_problem, PlannerOptions, DEFAULT_DEPTH_BOUND};
pub use validate::{validate, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub index: usize,
    #[serde(flatten)]
    pub task: TaskInstance,
    /// Leaf of the decomposition tree that produced this step.
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRef {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub task: TaskInstance,
    pub method: Option<MethodRef>,
    pub children: Vec<usize>,
    pub step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Decomposition {
    pub roots: Vec<usize>,
    pub nodes: Vec<TreeNode>,
}

impl Decomposition {
    /// Half-open range of step indices produced below `node`. A node with no
    /// steps gets an empty range at the position where it was expanded.
    pub fn step_range(&self, node: usize) -> (usize, usize) {
        self.step_ranges()[node]
    }

    /// `step_range` for every node, indexed by node id.
    pub fn step_ranges(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(0, 0); self.nodes.len()];
        let mut next = 0;
        for &r in &self.roots {
            self.walk_ranges(r, &mut next, &mut out);
        }
        out
    }

    fn walk_ranges(&self, id: usize, next: &mut usize, out: &mut [(usize, usize)]) {
        let start = *next;
        let n = &self.nodes[id];
        if let Some(s) = n.step {
            *next = s + 1;
        }
        for &c in &n.children {
            self.walk_ranges(c, next, out);
        }
        out[id] = (start, *next);
    }

    /// Task network still to be achieved once the first `completed` steps
    /// have run: finished subtrees are dropped, untouched ones are kept whole
    /// and partly executed ones are opened up.
    pub fn remaining_network(&self, completed: usize) -> crate::hddl::TaskNetwork {
        let ranges = self.step_ranges();
        let mut net = crate::hddl::TaskNetwork::new();
        let mut stack: Vec<usize> = self.roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            let (start, end) = ranges[id];
            if start >= completed {
                net.push(self.nodes[id].task.clone());
            } else if end > completed {
                stack.extend(self.nodes[id].children.iter().rev());
            }
        }
        net
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanStats {
    /// Search nodes popped from the stack.
    pub nodes_expanded: u64,
    /// Method applications generated, including alternatives never explored.
    pub decompositions: u64,
    /// Dead ends: inapplicable actions, no applicable method, or an unmet goal.
    pub backtracks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub decomposition: Decomposition,
    pub stats: PlanStats,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Indented text rendering of the decomposition tree.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    fn write_node(&self, f: &mut fmt::Formatter<'_>, id: usize, depth: usize) -> fmt::Result {
        let n = &self.decomposition.nodes[id];
        let pad = "  ".repeat(depth);
        match (&n.method, n.step) {
            (_, Some(s)) => writeln!(f, "{pad}{s}: {}", n.task)?,
            (Some(m), None) => {
                write!(f, "{pad}{} by {}", n.task, m.name)?;
                if !m.args.is_empty() {
                    write!(f, " [{}]", m.args.join(" "))?;
                }
                writeln!(f)?;
            }
            (None, None) => writeln!(f, "{pad}{}", n.task)?,
        }
        for &c in &n.children {
            self.write_node(f, c, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &r in &self.decomposition.roots {
            self.write_node(f, r, 0)?;
        }
        write!(
            f,
            "{} steps, {} nodes expanded, {} decompositions, {} backtracks\n",
            self.steps.len(),
            self.stats.nodes_expanded,
            self.stats.decompositions,
            self.stats.backtracks
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no plan: {reason}")]
    Unsolvable { reason: String, stats: PlanStats },
    #[error("no plan within the depth bound of {bound} decompositions")]
    DepthBound { bound: usize, stats: PlanStats },
    #[error(transparent)]
    Parse(#[from] crate::hddl::ParseError),
    #[error(transparent)]
    Ground(#[from] crate::hddl::GroundError),
}
