//! Discrete-time world: UUV kinematics under a constant current, dead-reckoning
//! drift, binary beacon detection at pulse instants, fleet broadcast, and the
//! execution semantics of the domain's primitive actions.

mod event;
mod step;

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Point2D;
use crate::hddl::{GroundAtom, State, TaskInstance};

pub use event::{sort_events, to_jsonl, Event, EventKind, EVENT_SCHEMA_VERSION};
pub use step::{broadcast, step};

/// Predicate shared with the fleet in broadcasts and added on divergence.
pub const UNREACHABLE_PREDICATE: &str = "beacon-unreachable";
/// Waypoint whose position is set by the last broadcast a UUV received.
pub const RALLY_WAYPOINT: &str = "rally";

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid world: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthAttribute {
    #[default]
    Seafloor,
    Midwater,
    Surface,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeaconState {
    pub id: String,
    pub position: Point2D,
    pub depth_attribute: DepthAttribute,
    pub acoustic_range: f64,
    pub active: bool,
    pub pulse_period: f64,
}

impl BeaconState {
    pub fn new(id: &str, position: Point2D, acoustic_range: f64, pulse_period: f64) -> Result<Self, SimError> {
        if !(acoustic_range > 0.0) || !(pulse_period > 0.0) {
            return Err(SimError::Invalid(format!(
                "beacon {id}: acoustic range and pulse period must be positive (got {acoustic_range}, {pulse_period})"
            )));
        }
        Ok(Self {
            id: id.to_string(),
            position,
            depth_attribute: DepthAttribute::default(),
            acoustic_range,
            active: true,
            pulse_period,
        })
    }
}

/// A plan step with the effects to apply to the belief when it completes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedAction {
    pub index: usize,
    pub task: TaskInstance,
    pub add: Vec<GroundAtom>,
    pub del: Vec<GroundAtom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Phase {
    Underway,
    Homing,
    Circling { elapsed: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveAction {
    pub action: PlannedAction,
    pub started_at: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissionStatus {
    Active,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UuvState {
    pub id: String,
    pub true_position: Point2D,
    pub estimated_position: Point2D,
    /// 1-sigma radius (m).
    pub position_uncertainty: f64,
    /// Radians, counter-clockwise from east.
    pub heading: f64,
    pub speed: f64,
    pub cruise_speed: f64,
    pub queue: VecDeque<PlannedAction>,
    pub current: Option<ActiveAction>,
    pub belief: State,
    pub rally: Option<Point2D>,
    /// Steps of the installed plan completed so far.
    pub steps_completed: usize,
    pub status: MissionStatus,
}

impl UuvState {
    pub fn new(id: &str, position: Point2D, cruise_speed: f64, uncertainty: f64) -> Self {
        Self {
            id: id.to_string(),
            true_position: position,
            estimated_position: position,
            position_uncertainty: uncertainty,
            heading: 0.0,
            speed: 0.0,
            cruise_speed,
            queue: VecDeque::new(),
            current: None,
            belief: State::new(),
            rally: None,
            steps_completed: 0,
            status: MissionStatus::Active,
        }
    }

    /// Replaces the remaining plan; an action in progress is dropped.
    pub fn install_plan(&mut self, actions: Vec<PlannedAction>) {
        self.queue = actions.into();
        self.current = None;
        self.steps_completed = 0;
        self.speed = 0.0;
    }

    pub fn has_remaining_plan(&self) -> bool {
        self.current.is_some() || !self.queue.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldParams {
    pub tick: f64,
    /// Drift velocity (m/s).
    pub current: Point2D,
    /// Dead-reckoning uncertainty growth per meter travelled.
    pub drift_rate: f64,
    pub comm_range: f64,
    pub standoff_radius: f64,
    pub localization_floor: f64,
    pub arrival_radius: f64,
    /// Circling time; one full circle at cruise speed when absent.
    pub circle_duration: Option<f64>,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            tick: 1.0,
            current: Point2D::new(0.0, 0.0),
            drift_rate: 0.02,
            comm_range: 2000.0,
            standoff_radius: 50.0,
            localization_floor: 5.0,
            arrival_radius: 10.0,
            circle_duration: None,
        }
    }
}

impl WorldParams {
    pub fn circle_duration_for(&self, speed: f64) -> f64 {
        self.circle_duration.unwrap_or(2.0 * PI * self.standoff_radius / speed)
    }
}

/// A change to a beacon's `active` flag at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconSwitch {
    pub beacon: String,
    pub time: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldState {
    pub tick_index: u64,
    pub params: WorldParams,
    /// Sorted by id.
    pub uuvs: Vec<UuvState>,
    pub beacons: Vec<BeaconState>,
    pub waypoints: BTreeMap<String, Point2D>,
    pub schedule: Vec<BeaconSwitch>,
    pub rng_seed: u64,
}

impl WorldState {
    pub fn new(
        params: WorldParams,
        mut uuvs: Vec<UuvState>,
        beacons: Vec<BeaconState>,
        waypoints: BTreeMap<String, Point2D>,
        mut schedule: Vec<BeaconSwitch>,
        rng_seed: u64,
    ) -> Result<Self, SimError> {
        if !(params.tick > 0.0) {
            return Err(SimError::Invalid(format!("tick must be positive, got {}", params.tick)));
        }
        for u in &uuvs {
            if !(u.cruise_speed >= 0.0) || !(u.position_uncertainty >= 0.0) {
                return Err(SimError::Invalid(format!("{}: speed and uncertainty must be nonnegative", u.id)));
            }
        }
        for s in &schedule {
            if !beacons.iter().any(|b| b.id == s.beacon) {
                return Err(SimError::Invalid(format!("schedule names unknown beacon '{}'", s.beacon)));
            }
        }
        uuvs.sort_by(|a, b| a.id.cmp(&b.id));
        schedule.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut w = Self { tick_index: 0, params, uuvs, beacons, waypoints, schedule, rng_seed };
        w.apply_schedule(f64::NEG_INFINITY, 0.0);
        Ok(w)
    }

    /// Offsets every true position from its estimate by Gaussian noise with
    /// the UUV's own uncertainty as the per-axis deviation.
    pub fn scatter_true_positions(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        for u in &mut self.uuvs {
            if u.position_uncertainty > 0.0 {
                let n = Normal::new(0.0, u.position_uncertainty).expect("finite deviation");
                let dx = n.sample(&mut rng);
                let dy = n.sample(&mut rng);
                u.true_position = Point2D::new(u.estimated_position.x + dx, u.estimated_position.y + dy);
            }
        }
    }

    pub fn sim_time(&self) -> f64 {
        self.tick_index as f64 * self.params.tick
    }

    pub fn uuv(&self, id: &str) -> Option<&UuvState> {
        self.uuvs.iter().find(|u| u.id == id)
    }

    pub fn uuv_mut(&mut self, id: &str) -> Option<&mut UuvState> {
        self.uuvs.iter_mut().find(|u| u.id == id)
    }

    pub fn beacon(&self, id: &str) -> Option<&BeaconState> {
        self.beacons.iter().find(|b| b.id == id)
    }

    /// Position of a named location as the given UUV knows it.
    pub fn location_for(&self, uuv: &UuvState, name: &str) -> Option<Point2D> {
        if name == RALLY_WAYPOINT {
            return uuv.rally;
        }
        self.beacon(name).map(|b| b.position).or_else(|| self.waypoints.get(name).copied())
    }

    fn apply_schedule(&mut self, after: f64, upto: f64) {
        for s in &self.schedule {
            if s.time > after && s.time <= upto {
                if let Some(b) = self.beacons.iter_mut().find(|b| b.id == s.beacon) {
                    b.active = s.active;
                }
            }
        }
    }

    pub fn all_done(&self) -> bool {
        self.uuvs.iter().all(|u| u.status != MissionStatus::Active)
    }
}

pub fn is_pulse_instant(time: f64, period: f64) -> bool {
    let r = time / period;
    (r - r.round()).abs() < 1e-9
}

/// Binary detection: the beacon is active, within range of the true
/// position, and emitting at this instant.
pub fn sense_beacon(uuv: &UuvState, beacon: &BeaconState, time: f64) -> bool {
    beacon.active
        && uuv.true_position.distance(&beacon.position) <= beacon.acoustic_range
        && is_pulse_instant(time, beacon.pulse_period)
}

/// Position fix at the end of a circle: the estimate snaps to the standoff
/// circle on the side of the true position and uncertainty drops to the floor.
pub fn circle_localize(uuv: &mut UuvState, beacon: &BeaconState, params: &WorldParams) {
    let d = uuv.true_position.distance(&beacon.position);
    let (ux, uy) = if d > 0.0 {
        ((uuv.true_position.x - beacon.position.x) / d, (uuv.true_position.y - beacon.position.y) / d)
    } else {
        (1.0, 0.0)
    };
    uuv.estimated_position = Point2D::new(
        beacon.position.x + params.standoff_radius * ux,
        beacon.position.y + params.standoff_radius * uy,
    );
    uuv.position_uncertainty = params.localization_floor;
}

/// Moves one tick at `speed` along `heading`: the true position also drifts
/// with the current, the estimate does not, and uncertainty grows with the
/// distance travelled through the water.
pub fn advance(uuv: &mut UuvState, heading: f64, speed: f64, params: &WorldParams) {
    let dt = params.tick;
    let (s, c) = heading.sin_cos();
    uuv.heading = heading;
    uuv.speed = speed;
    uuv.true_position = Point2D::new(
        uuv.true_position.x + speed * dt * c + params.current.x * dt,
        uuv.true_position.y + speed * dt * s + params.current.y * dt,
    );
    uuv.estimated_position =
        Point2D::new(uuv.estimated_position.x + speed * dt * c, uuv.estimated_position.y + speed * dt * s);
    uuv.position_uncertainty += params.drift_rate * speed * dt;
}
