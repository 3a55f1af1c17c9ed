//! Beacon placement by volume-balanced Lloyd relaxation, and the beacon route
//! graph searched with A*.

mod graph;
mod lloyd;

use thiserror::Error;

pub use graph::{astar_route, build_beacon_graph, BeaconGraph, Route};
pub use lloyd::{
    assign_cells, lloyd_deploy, objective, CellAssignment, DeploymentProblem, DeploymentResult, WaterRegion,
    WEIGHT_STEP,
};

/// Default acoustic range of a beacon (m).
pub const ACOUSTIC_RANGE: f64 = 2000.0;
/// Default link distance: a leg no longer than twice the acoustic range keeps
/// a vehicle within range of one of its endpoints.
pub const DEFAULT_LINK_DISTANCE: f64 = 2.0 * ACOUSTIC_RANGE;

#[derive(Debug, Error, PartialEq)]
pub enum DeployError {
    #[error("invalid deployment problem: {0}")]
    InvalidProblem(String),
    #[error("only {cells} water cells lie inside the polygon, fewer than the {beacons} beacons requested")]
    TooFewWaterCells { cells: usize, beacons: usize },
    #[error("objective needs at least one volume")]
    EmptyVolumes,
    #[error("unknown beacon index {node} (graph has {nodes} beacons)")]
    UnknownNode { node: usize, nodes: usize },
}
