//! Beacon route graph and A* search over it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::{DeployError, DeploymentResult};
use crate::geo::Point2D;

/// Undirected graph over beacons: an edge joins two beacons whose distance is
/// at most `coverage_link_distance`.
#[derive(Debug, Clone, Serialize)]
pub struct BeaconGraph {
    pub positions: Vec<Point2D>,
    /// `(i, j, length)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize, f64)>,
    pub coverage_link_distance: f64,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl BeaconGraph {
    pub fn new(positions: Vec<Point2D>, coverage_link_distance: f64) -> Result<Self, DeployError> {
        if !(coverage_link_distance > 0.0) {
            return Err(DeployError::InvalidProblem(format!(
                "coverage link distance must be positive, got {coverage_link_distance}"
            )));
        }
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); positions.len()];
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let d = positions[i].distance(&positions[j]);
                if d <= coverage_link_distance {
                    edges.push((i, j, d));
                    adjacency[i].push((j, d));
                    adjacency[j].push((i, d));
                }
            }
        }
        Ok(Self { positions, edges, coverage_link_distance, adjacency })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }
}

pub fn build_beacon_graph(result: &DeploymentResult, coverage_link_distance: f64) -> Result<BeaconGraph, DeployError> {
    BeaconGraph::new(result.beacon_positions.clone(), coverage_link_distance)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Route {
    /// Beacon indices from start to goal; empty when the goal is unreachable.
    pub nodes: Vec<usize>,
    pub cost: f64,
}

impl Route {
    pub fn is_reachable(&self) -> bool {
        !self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // min-heap on f, then lowest node index
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest route by total edge length, guided by straight-line distance to
/// the goal.
pub fn astar_route(graph: &BeaconGraph, start: usize, goal: usize) -> Result<Route, DeployError> {
    for node in [start, goal] {
        if node >= graph.len() {
            return Err(DeployError::UnknownNode { node, nodes: graph.len() });
        }
    }
    let h = |n: usize| graph.positions[n].distance(&graph.positions[goal]);
    let mut best_g = vec![f64::INFINITY; graph.len()];
    let mut came_from = vec![usize::MAX; graph.len()];
    let mut closed = vec![false; graph.len()];
    let mut open = BinaryHeap::new();
    best_g[start] = 0.0;
    open.push(Open { f: h(start), g: 0.0, node: start });

    while let Some(Open { g, node, .. }) = open.pop() {
        if closed[node] || g > best_g[node] {
            continue;
        }
        if node == goal {
            let mut nodes = vec![goal];
            let mut cur = goal;
            while cur != start {
                cur = came_from[cur];
                nodes.push(cur);
            }
            nodes.reverse();
            return Ok(Route { nodes, cost: g });
        }
        closed[node] = true;
        for &(next, len) in graph.neighbors(node) {
            let tentative = g + len;
            if !closed[next] && tentative < best_g[next] {
                best_g[next] = tentative;
                came_from[next] = node;
                open.push(Open { f: tentative + h(next), g: tentative, node: next });
            }
        }
    }
    Ok(Route { nodes: Vec::new(), cost: f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64], link: f64) -> BeaconGraph {
        BeaconGraph::new(xs.iter().map(|&x| Point2D::new(x, 0.0)).collect(), link).unwrap()
    }

    #[test]
    fn link_rule() {
        assert_eq!(line(&[0.0, 3000.0], 4000.0).edges.len(), 1);
        assert_eq!(line(&[0.0, 5000.0], 4000.0).edges.len(), 0);
        let g = line(&[0.0, 2000.0, 4000.0], 2500.0);
        assert_eq!(g.edges.iter().map(|e| (e.0, e.1)).collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert!(BeaconGraph::new(vec![], 0.0).is_err());
    }

    #[test]
    fn trivial_routes() {
        let g = line(&[0.0, 2000.0, 4000.0], 2500.0);
        assert_eq!(astar_route(&g, 1, 1).unwrap(), Route { nodes: vec![1], cost: 0.0 });
        assert_eq!(astar_route(&g, 0, 2).unwrap().nodes, vec![0, 1, 2]);
        assert_eq!(astar_route(&g, 0, 2).unwrap().cost, 4000.0);
        assert!(matches!(astar_route(&g, 0, 3), Err(DeployError::UnknownNode { node: 3, .. })));
    }

    #[test]
    fn unreachable_goal_gives_empty_route() {
        let g = line(&[0.0, 5000.0], 4000.0);
        let r = astar_route(&g, 0, 1).unwrap();
        assert!(!r.is_reachable());
    }
}
