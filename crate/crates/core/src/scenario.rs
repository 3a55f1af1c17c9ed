//! Closed-loop runs: plan every UUV, step the world, monitor expectations and
//! replan on divergence until every mission ends or the step cap is hit.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::export::{read_beacons, BeaconSpec, Track};
use crate::geo::Point2D;
use crate::hddl::{parse_domain, parse_problem, DomainAst};
use crate::htn::{plan_problem, Plan, PlanError, PlannerOptions};
use crate::monitor::{derive_expectations, planned_actions, Agent, DivergenceRecord, Monitor, Replan};
use crate::sim::{sort_events, step, BeaconState, Event, EventKind, MissionStatus, UuvState, WorldState};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{uuv}: {source}")]
    Unsolvable { uuv: String, source: PlanError },
    #[error("{0}")]
    Runtime(String),
}

impl ScenarioError {
    fn input(path: &Path, message: impl ToString) -> Self {
        ScenarioError::Input { path: path.display().to_string(), message: message.to_string() }
    }
}

pub(crate) fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::input(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UuvSummary {
    pub id: String,
    pub success: bool,
    pub status: MissionStatus,
    pub replan_count: usize,
    pub steps_completed: usize,
    pub final_estimate: Point2D,
    pub final_position: Point2D,
    pub final_uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub mission_success: bool,
    pub replan_count: usize,
    pub divergence_count: usize,
    pub ticks: u64,
    pub total_sim_time: f64,
    pub step_cap_reached: bool,
    pub uuvs: Vec<UuvSummary>,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub events: Vec<Event>,
    pub tracks: Vec<Track>,
    pub summary: Summary,
    /// Plans made before the first tick.
    pub initial_plans: BTreeMap<String, Plan>,
    pub agents: BTreeMap<String, Agent>,
    pub replans: Vec<Replan>,
    pub divergences: Vec<DivergenceRecord>,
    pub world: WorldState,
}

impl ScenarioRun {
    pub fn events_of<'a>(&'a self, uuv: &'a str) -> impl Iterator<Item = &'a Event> + 'a {
        self.events.iter().filter(move |e| e.subject == uuv)
    }
}

pub fn load_domain(cfg: &ScenarioConfig) -> Result<DomainAst, ScenarioError> {
    let path = cfg.require("domain", &cfg.domain)?;
    parse_domain(&read(path)?).map_err(|e| ScenarioError::input(path, e))
}

pub fn load_beacons(cfg: &ScenarioConfig) -> Result<Vec<BeaconSpec>, ScenarioError> {
    let path = cfg.require("beacons", &cfg.beacons)?;
    read_beacons(&read(path)?).map_err(|e| ScenarioError::input(path, e))
}

/// Runs the scenario described by `cfg` to completion.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, ScenarioError> {
    let domain = load_domain(cfg)?;
    let specs = load_beacons(cfg)?;
    let options = PlannerOptions::default();

    let mut beacons = Vec::new();
    for s in &specs {
        let mut b = BeaconState::new(&s.id, s.position, cfg.acoustic_range, cfg.pulse_period).map_err(|e| ScenarioError::Runtime(e.to_string()))?;
        b.depth_attribute = s.depth_attribute;
        beacons.push(b);
    }
    let waypoints = cfg.waypoint_positions();

    let mut agents = BTreeMap::new();
    let mut uuvs = Vec::new();
    for u in &cfg.uuvs {
        let start = waypoints
            .get(&u.start.to_lowercase())
            .copied()
            .or_else(|| specs.iter().find(|b| b.id == u.start.to_lowercase()).map(|b| b.position))
            .ok_or_else(|| ScenarioError::Runtime(format!("uuv '{}': unknown start location '{}'", u.id, u.start)))?;
        let problem = parse_problem(&read(&u.problem)?, &domain).map_err(|e| ScenarioError::input(&u.problem, e))?;
        let (tables, plan) = plan_problem(&domain, &problem, &options).map_err(|source| match source {
            PlanError::Parse(e) => ScenarioError::input(&u.problem, e),
            PlanError::Ground(e) => ScenarioError::input(&u.problem, e),
            source => ScenarioError::Unsolvable { uuv: u.id.clone(), source },
        })?;
        let mut state = UuvState::new(&u.id.to_lowercase(), start, u.speed, u.initial_uncertainty);
        state.belief = tables.initial_state.clone();
        uuvs.push(state);
        agents.insert(u.id.to_lowercase(), Agent { problem, tables, plan });
    }

    let mut world = WorldState::new(cfg.world, uuvs, beacons, waypoints, cfg.beacon_schedule.clone(), cfg.seed)
        .map_err(|e| ScenarioError::Runtime(e.to_string()))?;
    world.scatter_true_positions();

    let mut monitor = Monitor::new(cfg.margin);
    for i in 0..world.uuvs.len() {
        let id = world.uuvs[i].id.clone();
        let agent = &agents[&id];
        let actions = planned_actions(&agent.plan, &agent.tables);
        let expectations = derive_expectations(&actions, &world.uuvs[i], &world, cfg.margin).map_err(|e| ScenarioError::Runtime(e.to_string()))?;
        world.uuvs[i].install_plan(actions);
        monitor.set_expectations(&id, expectations);
    }
    let initial_plans = agents.iter().map(|(k, a)| (k.clone(), a.plan.clone())).collect();

    let mut tracks: Vec<Track> = world.uuvs.iter().map(|u| Track::new(&u.id)).collect();
    let mut tracking = vec![true; world.uuvs.len()];
    for (t, u) in tracks.iter_mut().zip(&world.uuvs) {
        t.push(0.0, u.true_position, u.estimated_position);
    }

    let mut events = Vec::new();
    let mut replans = Vec::new();
    let mut replan_counts: BTreeMap<String, usize> = BTreeMap::new();
    while !world.all_done() && world.tick_index < cfg.step_cap {
        let mut tick_events = step(&mut world);
        monitor.observe(&tick_events);
        let mut replanned: BTreeSet<String> = BTreeSet::new();
        for record in monitor.poll(&world) {
            if replanned.contains(&record.expectation.uuv) {
                continue;
            }
            let outcome = monitor.replan_episode(&record, &mut world, &mut agents, &options);
            replanned.extend(outcome.affected.iter().cloned());
            for e in &outcome.events {
                if e.kind == EventKind::ReplanTriggered {
                    *replan_counts.entry(e.subject.clone()).or_default() += 1;
                }
            }
            tick_events.extend(outcome.events);
            replans.extend(outcome.replans);
        }
        sort_events(&mut tick_events);
        events.extend(tick_events);

        let time = world.sim_time();
        for (i, u) in world.uuvs.iter().enumerate() {
            if tracking[i] {
                tracks[i].push(time, u.true_position, u.estimated_position);
                tracking[i] = u.status == MissionStatus::Active;
            }
        }
    }

    let summary = Summary {
        seed: cfg.seed,
        mission_success: world.uuvs.iter().all(|u| u.status == MissionStatus::Completed),
        replan_count: replan_counts.values().sum(),
        divergence_count: monitor.records.len(),
        ticks: world.tick_index,
        total_sim_time: world.sim_time(),
        step_cap_reached: !world.all_done(),
        uuvs: world
            .uuvs
            .iter()
            .map(|u| UuvSummary {
                id: u.id.clone(),
                success: u.status == MissionStatus::Completed,
                status: u.status,
                replan_count: replan_counts.get(&u.id).copied().unwrap_or(0),
                steps_completed: u.steps_completed,
                final_estimate: u.estimated_position,
                final_position: u.true_position,
                final_uncertainty: u.position_uncertainty,
            })
            .collect(),
    };
    Ok(ScenarioRun {
        events,
        tracks,
        summary,
        initial_plans,
        agents,
        replans,
        divergences: monitor.records.clone(),
        world,
    })
}
