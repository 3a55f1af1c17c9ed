//! Execution monitoring: expected beacon detections derived from the active
//! plan, divergence when a window closes unmet, and replanning episodes for
//! the divergent UUV and the fleet members it can reach.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::geo::Point2D;
use crate::hddl::{GroundAtom, GroundTables, ProblemAst, State, TaskNetwork};
use crate::htn::{plan, Plan, PlanError, PlannerOptions};
use crate::sim::{Event, EventKind, MissionStatus, PlannedAction, UuvState, WorldState, UNREACHABLE_PREDICATE};

pub const DEFAULT_MARGIN: f64 = 0.5;

const NAVIGATE: &str = "navigate-to-beacon";
const TRANSIT: &str = "transit-leg";
const CIRCLE: &str = "circle-localize";

#[derive(Debug, Error, PartialEq)]
pub enum MonitorError {
    #[error("{uuv}: step {step} is an inexecutable leg of {distance:.1} m at zero speed")]
    InexecutableLeg { uuv: String, step: usize, distance: f64 },
    #[error("{uuv}: step {step} refers to unknown location '{location}'")]
    UnknownLocation { uuv: String, step: usize, location: String },
}

/// A detection of `beacon` expected while plan step `step` runs, between
/// `earliest` and `latest` seconds after the step starts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub uuv: String,
    pub kind: EventKind,
    pub beacon: String,
    pub step: usize,
    /// Planned start of the step relative to the start of the plan.
    pub start_offset: f64,
    pub earliest: f64,
    pub latest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmedExpectation {
    pub expectation: Expectation,
    pub armed_at: f64,
}

impl ArmedExpectation {
    pub fn closes_at(&self) -> f64 {
        self.armed_at + self.expectation.latest
    }

    fn met_by(&self, e: &Event) -> bool {
        e.kind == self.expectation.kind
            && e.subject == self.expectation.uuv
            && e.get_str("beacon") == Some(self.expectation.beacon.as_str())
            && e.time >= self.armed_at
            && e.time <= self.closes_at()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRecord {
    pub expectation: Expectation,
    pub armed_at: f64,
    pub time: f64,
    pub estimated_position: Point2D,
    pub position_uncertainty: f64,
}

impl DivergenceRecord {
    pub fn event(&self) -> Event {
        Event::new(self.time, EventKind::Divergence, &self.expectation.uuv)
            .with("expected", self.expectation.kind.as_str())
            .with("beacon", self.expectation.beacon.as_str())
            .with("step", self.expectation.step)
            .with("armed_at", self.armed_at)
            .with("window", json!([self.armed_at + self.expectation.earliest, self.armed_at + self.expectation.latest]))
            .with("estimated_position", json!([self.estimated_position.x, self.estimated_position.y]))
            .with("position_uncertainty", self.position_uncertainty)
    }
}

/// Detection window for a leg of `distance` metres. The relative margin grows
/// with the ratio of position uncertainty to leg length.
pub fn detection_window(distance: f64, speed: f64, uncertainty: f64, margin: f64, pulse_period: f64) -> (f64, f64) {
    let nominal = distance / speed;
    let m = if distance > 0.0 { margin * (1.0 + uncertainty / distance) } else { margin };
    ((nominal * (1.0 - m)).max(0.0), nominal * (1.0 + m) + pulse_period)
}

/// One detection expectation per navigate step of `steps`, chaining positions
/// from the UUV's current estimate.
pub fn derive_expectations(
    steps: &[PlannedAction],
    uuv: &UuvState,
    world: &WorldState,
    margin: f64,
) -> Result<Vec<Expectation>, MonitorError> {
    let mut out = Vec::new();
    let mut pos = uuv.estimated_position;
    let mut offset = 0.0;
    let speed = uuv.cruise_speed;
    for a in steps {
        let locate = |k: usize| -> Result<(String, Point2D), MonitorError> {
            let name = a.task.args.get(k).cloned().unwrap_or_default();
            match world.location_for(uuv, &name) {
                Some(p) => Ok((name, p)),
                None => Err(MonitorError::UnknownLocation { uuv: uuv.id.clone(), step: a.index, location: name }),
            }
        };
        let leg = |to: Point2D| -> Result<f64, MonitorError> {
            let d = pos.distance(&to);
            if d > 0.0 && speed <= 0.0 {
                return Err(MonitorError::InexecutableLeg { uuv: uuv.id.clone(), step: a.index, distance: d });
            }
            Ok(if d > 0.0 { d / speed } else { 0.0 })
        };
        match a.task.name.as_str() {
            NAVIGATE => {
                let (name, to) = locate(2)?;
                let duration = leg(to)?;
                let pulse = world.beacon(&name).map_or(0.0, |b| b.pulse_period);
                let (earliest, latest) =
                    if duration > 0.0 { detection_window(pos.distance(&to), speed, uuv.position_uncertainty, margin, pulse) } else { (0.0, pulse) };
                out.push(Expectation {
                    uuv: uuv.id.clone(),
                    kind: EventKind::Detection,
                    beacon: name,
                    step: a.index,
                    start_offset: offset,
                    earliest,
                    latest,
                });
                offset += duration;
                pos = to;
            }
            TRANSIT => {
                // the rally point may be unknown until a broadcast arrives
                if let Ok((_, to)) = locate(2) {
                    offset += leg(to)?;
                    pos = to;
                }
            }
            CIRCLE if speed > 0.0 => offset += world.params.circle_duration_for(speed),
            _ => {}
        }
    }
    Ok(out)
}

/// Records for every armed expectation whose window closed before the
/// world's current time without a matching event in `log`.
pub fn check(world: &WorldState, armed: &[ArmedExpectation], log: &[Event]) -> Vec<DivergenceRecord> {
    let now = world.sim_time();
    armed
        .iter()
        .filter(|a| now > a.closes_at() && !log.iter().any(|e| a.met_by(e)))
        .map(|a| {
            let u = world.uuv(&a.expectation.uuv);
            DivergenceRecord {
                expectation: a.expectation.clone(),
                armed_at: a.armed_at,
                time: now,
                estimated_position: u.map_or(Point2D::new(0.0, 0.0), |u| u.estimated_position),
                position_uncertainty: u.map_or(0.0, |u| u.position_uncertainty),
            }
        })
        .collect()
}

/// Ground actions of a plan in the form the simulator executes.
pub fn planned_actions(plan: &Plan, tables: &GroundTables) -> Vec<PlannedAction> {
    plan.steps
        .iter()
        .map(|s| {
            let a = tables.action(&s.task).expect("plan steps are ground actions");
            PlannedAction { index: s.index, task: s.task.clone(), add: a.add.clone(), del: a.del.clone() }
        })
        .collect()
}

/// A UUV's own planning problem, its ground tables and the plan it runs.
#[derive(Debug, Clone)]
pub struct Agent {
    pub problem: ProblemAst,
    pub tables: GroundTables,
    pub plan: Plan,
}

/// One replanning call made during an episode.
#[derive(Debug, Clone)]
pub struct Replan {
    pub uuv: String,
    pub problem: ProblemAst,
    pub result: Result<Plan, PlanError>,
}

impl Replan {
    pub fn initial_state(&self) -> State {
        self.problem.init.iter().cloned().collect()
    }

    pub fn network(&self) -> &TaskNetwork {
        &self.problem.htn
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReplanOutcome {
    pub events: Vec<Event>,
    /// UUVs whose belief received the divergence fact, in id order.
    pub affected: Vec<String>,
    pub replans: Vec<Replan>,
}

/// Tracks which expectations are pending and armed for each UUV.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub margin: f64,
    pending: BTreeMap<String, Vec<Expectation>>,
    armed: Vec<ArmedExpectation>,
    detections: Vec<Event>,
    pub records: Vec<DivergenceRecord>,
}

impl Monitor {
    pub fn new(margin: f64) -> Self {
        Self { margin, pending: BTreeMap::new(), armed: Vec::new(), detections: Vec::new(), records: Vec::new() }
    }

    /// Replaces the expectations of one UUV and disarms its open ones.
    pub fn set_expectations(&mut self, uuv: &str, expectations: Vec<Expectation>) {
        self.armed.retain(|a| a.expectation.uuv != uuv);
        self.pending.insert(uuv.to_string(), expectations);
    }

    pub fn armed(&self) -> &[ArmedExpectation] {
        &self.armed
    }

    /// Arms expectations whose step has started and keeps detections.
    pub fn observe(&mut self, events: &[Event]) {
        for e in events {
            match e.kind {
                EventKind::ActionStarted => {
                    let step = e.get("step").and_then(|v| v.as_u64()).map(|s| s as usize);
                    let Some(pending) = self.pending.get_mut(&e.subject) else { continue };
                    if let Some(k) = pending.iter().position(|x| Some(x.step) == step) {
                        let expectation = pending.remove(k);
                        self.armed.push(ArmedExpectation { expectation, armed_at: e.time });
                    }
                }
                EventKind::Detection => self.detections.push(e.clone()),
                _ => {}
            }
        }
    }

    /// Divergences due now. Met and expired expectations are disarmed.
    pub fn poll(&mut self, world: &WorldState) -> Vec<DivergenceRecord> {
        let records = check(world, &self.armed, &self.detections);
        let now = world.sim_time();
        let detections = &self.detections;
        self.armed.retain(|a| now <= a.closes_at() && !detections.iter().any(|e| a.met_by(e)));
        self.detections.retain(|e| self.armed.iter().any(|a| e.time >= a.armed_at));
        self.records.extend(records.iter().cloned());
        records
    }

    /// Adds the unreachable fact for the missed beacon to the belief of the
    /// divergent UUV and of every active UUV within comm range of it, then
    /// replans each of them from its belief and remaining task network.
    pub fn replan_episode(
        &mut self,
        record: &DivergenceRecord,
        world: &mut WorldState,
        agents: &mut BTreeMap<String, Agent>,
        options: &PlannerOptions,
    ) -> ReplanOutcome {
        let mut out = ReplanOutcome { events: vec![record.event()], ..Default::default() };
        let time = world.sim_time();
        let trigger = record.expectation.uuv.as_str();
        let Some(center) = world.uuv(trigger).map(|u| u.true_position) else {
            return out;
        };
        let fact = GroundAtom::new(UNREACHABLE_PREDICATE, &[record.expectation.beacon.as_str()]);
        let range = world.params.comm_range;
        let margin = self.margin;

        for i in 0..world.uuvs.len() {
            let u = &world.uuvs[i];
            let in_range = u.id == trigger || (u.status == MissionStatus::Active && u.true_position.distance(&center) <= range);
            if !in_range {
                continue;
            }
            let id = u.id.clone();
            out.affected.push(id.clone());
            world.uuvs[i].belief.insert(fact.clone());
            if !world.uuvs[i].has_remaining_plan() {
                out.events.push(
                    Event::new(time, EventKind::Warning, &id)
                        .with("message", "divergence with no remaining plan; nothing to replan")
                        .with("beacon", record.expectation.beacon.as_str()),
                );
                continue;
            }
            let Some(agent) = agents.get_mut(&id) else {
                out.events.push(Event::new(time, EventKind::Warning, &id).with("message", "no planning problem for this UUV"));
                continue;
            };
            let u = &world.uuvs[i];
            let w0 = agent.plan.decomposition.remaining_network(u.steps_completed);
            let problem = ProblemAst {
                name: format!("{}-replan-t{}", agent.problem.name, time),
                init: u.belief.iter().cloned().collect(),
                htn: w0.clone(),
                ..agent.problem.clone()
            };
            let result = plan(&agent.tables, &u.belief, &w0, agent.tables.goal.as_ref(), options);
            match &result {
                Ok(p) => {
                    let actions = planned_actions(p, &agent.tables);
                    world.uuvs[i].install_plan(actions.clone());
                    let expectations = derive_expectations(&actions, &world.uuvs[i], world, margin).unwrap_or_default();
                    self.set_expectations(&id, expectations);
                    agent.plan = p.clone();
                    out.events.push(
                        Event::new(time, EventKind::ReplanTriggered, &id)
                            .with("trigger", trigger)
                            .with("beacon", record.expectation.beacon.as_str())
                            .with("network", w0.tasks.iter().map(|t| t.to_string()).collect::<Vec<_>>())
                            .with("steps", p.len()),
                    );
                }
                Err(e) => {
                    let u = &mut world.uuvs[i];
                    u.queue.clear();
                    u.current = None;
                    u.speed = 0.0;
                    u.status = MissionStatus::Failed;
                    self.set_expectations(&id, Vec::new());
                    out.events.push(
                        Event::new(time, EventKind::MissionFailed, &id).with("reason", format!("replanning failed: {e}")).with("trigger", trigger),
                    );
                }
            }
            out.replans.push(Replan { uuv: id, problem, result });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hddl::{parse_domain, parse_problem, TaskInstance};
    use crate::htn::{plan_problem, validate};
    use crate::sim::{step, BeaconState, WorldParams};

    const DOMAIN: &str = include_str!("../../../domains/uuv-nav.hddl");

    fn nav(index: usize, to: &str) -> PlannedAction {
        PlannedAction {
            index,
            task: TaskInstance { name: NAVIGATE.into(), args: vec!["u".into(), "x".into(), to.into()] },
            add: vec![],
            del: vec![],
        }
    }

    fn other(index: usize, name: &str) -> PlannedAction {
        PlannedAction { index, task: TaskInstance { name: name.into(), args: vec!["u".into(), "b1".into()] }, add: vec![], del: vec![] }
    }

    fn line_world(speed: f64, uncertainty: f64) -> WorldState {
        let beacons = vec![
            BeaconState::new("b1", Point2D::new(1000.0, 0.0), 2000.0, 10.0).unwrap(),
            BeaconState::new("b2", Point2D::new(3000.0, 0.0), 2000.0, 10.0).unwrap(),
        ];
        let u = UuvState::new("u", Point2D::new(0.0, 0.0), speed, uncertainty);
        WorldState::new(WorldParams::default(), vec![u], beacons, BTreeMap::new(), vec![], 1).unwrap()
    }

    #[test]
    fn window_for_a_kilometre_leg() {
        let w = line_world(1.0, 0.0);
        let e = derive_expectations(&[nav(0, "b1")], &w.uuvs[0], &w, 0.5).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].earliest, e[0].latest), (500.0, 1510.0));
        assert_eq!(e[0].beacon, "b1");
    }

    #[test]
    fn no_navigate_steps_no_expectations() {
        let w = line_world(1.0, 0.0);
        let e = derive_expectations(&[other(0, "sense-beacon"), other(1, "broadcast")], &w.uuvs[0], &w, 0.5).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn sequential_legs_have_ordered_offsets() {
        let w = line_world(1.0, 0.0);
        let e = derive_expectations(&[nav(0, "b1"), other(1, "sense-beacon"), nav(2, "b2")], &w.uuvs[0], &w, 0.5).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].step, e[1].step), (0, 2));
        assert_eq!((e[0].start_offset, e[1].start_offset), (0.0, 1000.0));
        assert_eq!(e[1].latest, 2000.0 * 1.5 + 10.0);
    }

    #[test]
    fn zero_speed_leg_is_an_error() {
        let w = line_world(0.0, 0.0);
        let err = derive_expectations(&[nav(0, "b1")], &w.uuvs[0], &w, 0.5).unwrap_err();
        assert!(matches!(err, MonitorError::InexecutableLeg { step: 0, .. }), "{err}");
    }

    #[test]
    fn uncertainty_widens_the_window() {
        let w0 = line_world(1.0, 0.0);
        let w1 = line_world(1.0, 200.0);
        let a = derive_expectations(&[nav(0, "b1")], &w0.uuvs[0], &w0, 0.5).unwrap();
        let b = derive_expectations(&[nav(0, "b1")], &w1.uuvs[0], &w1, 0.5).unwrap();
        assert!(b[0].earliest < a[0].earliest && b[0].latest > a[0].latest);
    }

    fn armed(latest: f64) -> ArmedExpectation {
        ArmedExpectation {
            expectation: Expectation {
                uuv: "u".into(),
                kind: EventKind::Detection,
                beacon: "b1".into(),
                step: 0,
                start_offset: 0.0,
                earliest: 0.0,
                latest,
            },
            armed_at: 1.0,
        }
    }

    fn at_time(t: u64) -> WorldState {
        let mut w = line_world(1.0, 0.0);
        w.tick_index = t;
        w
    }

    #[test]
    fn check_cases() {
        let det = Event::new(50.0, EventKind::Detection, "u").with("beacon", "b1");
        // detection inside the window
        assert!(check(&at_time(200), &[armed(100.0)], &[det.clone()]).is_empty());
        // window still open
        assert!(check(&at_time(90), &[armed(100.0)], &[]).is_empty());
        // window expired unmet
        let r = check(&at_time(102), &[armed(100.0)], &[]);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].time, 102.0);
        // a detection of another beacon does not count
        let wrong = Event::new(50.0, EventKind::Detection, "u").with("beacon", "b2");
        assert_eq!(check(&at_time(102), &[armed(100.0)], &[wrong]).len(), 1);
    }

    fn silenced_line(margin: f64) -> (WorldState, Monitor) {
        let mut w = line_world(1.0, 0.0);
        w.beacons[0].active = false;
        let actions = vec![nav(0, "b1")];
        let exp = derive_expectations(&actions, &w.uuvs[0], &w, margin).unwrap();
        w.uuvs[0].install_plan(actions);
        let mut m = Monitor::new(margin);
        m.set_expectations("u", exp);
        (w, m)
    }

    #[test]
    fn silenced_beacon_diverges_one_tick_after_the_window() {
        let (mut w, mut m) = silenced_line(0.5);
        let mut fired = None;
        for _ in 0..3000 {
            let ev = step(&mut w);
            m.observe(&ev);
            if let Some(r) = m.poll(&w).into_iter().next() {
                fired = Some(r);
                break;
            }
        }
        let r = fired.expect("divergence");
        // armed at t=1, window closes at 1 + 1510
        assert_eq!(r.time, 1512.0);
        assert!(m.armed().is_empty());
    }

    #[test]
    fn active_beacon_is_met() {
        let (mut w, mut m) = silenced_line(0.5);
        w.beacons[0].active = true;
        for _ in 0..3000 {
            let ev = step(&mut w);
            m.observe(&ev);
            assert!(m.poll(&w).is_empty(), "false divergence at {}", w.sim_time());
        }
        assert!(m.records.is_empty());
    }

    /// Two UUVs on the bundled domain: `a` delivers a message through b6 and
    /// `b` waits at the rally `gap` metres from b6.
    fn fleet(gap: f64) -> (WorldState, BTreeMap<String, Agent>, Monitor) {
        let d = parse_domain(DOMAIN).unwrap();
        let mk = |id: &str, task: &str| {
            let text = format!(
                "(define (problem {id}) (:domain uuv-nav)
                  (:objects {id} - uuv b6 b8 - beacon s rally - waypoint)
                  (:htn :ordered-subtasks {task})
                  (:init (at {id} s) (link b6 b8) (link b8 b6)))"
            );
            let p = parse_problem(&text, &d).unwrap();
            let (tables, plan) = plan_problem(&d, &p, &PlannerOptions::default()).unwrap();
            Agent { problem: p, tables, plan }
        };
        let mut agents = BTreeMap::new();
        agents.insert("a".to_string(), mk("a", "(deliver-message a b6 b8)"));
        agents.insert("b".to_string(), mk("b", "(join-fleet b rally)"));
        let beacons = vec![
            BeaconState::new("b6", Point2D::new(3000.0, 0.0), 2000.0, 10.0).unwrap(),
            BeaconState::new("b8", Point2D::new(6000.0, 0.0), 2000.0, 10.0).unwrap(),
        ];
        let uuvs = vec![UuvState::new("a", Point2D::new(0.0, 0.0), 1.5, 0.0), UuvState::new("b", Point2D::new(3000.0, gap), 1.5, 0.0)];
        let waypoints = BTreeMap::from([("s".to_string(), Point2D::new(0.0, 0.0))]);
        let mut w = WorldState::new(WorldParams::default(), uuvs, beacons, waypoints, vec![], 7).unwrap();
        w.beacons[0].active = false;
        let mut m = Monitor::new(DEFAULT_MARGIN);
        for (id, agent) in &agents {
            let actions = planned_actions(&agent.plan, &agent.tables);
            let idx = w.uuvs.iter().position(|u| &u.id == id).unwrap();
            let e = derive_expectations(&actions, &w.uuvs[idx], &w, DEFAULT_MARGIN).unwrap();
            w.uuvs[idx].install_plan(actions);
            w.uuvs[idx].belief = agent.tables.initial_state.clone();
            m.set_expectations(id, e);
        }
        (w, agents, m)
    }

    fn run_to_divergence(w: &mut WorldState, m: &mut Monitor) -> DivergenceRecord {
        for _ in 0..10_000 {
            let ev = step(w);
            m.observe(&ev);
            if let Some(r) = m.poll(w).into_iter().next() {
                return r;
            }
        }
        panic!("no divergence")
    }

    #[test]
    fn in_range_member_replans_and_plans_validate_from_belief() {
        let (mut w, mut agents, mut m) = fleet(100.0);
        let r = run_to_divergence(&mut w, &mut m);
        assert_eq!(r.expectation.beacon, "b6");
        let out = m.replan_episode(&r, &mut w, &mut agents, &PlannerOptions::default());
        assert_eq!(out.affected, vec!["a", "b"]);
        assert_eq!(out.replans.len(), 2);
        for rp in &out.replans {
            let p = rp.result.as_ref().unwrap_or_else(|e| panic!("{}: {e:?} {:?} {:?}", rp.uuv, rp.problem.htn.tasks, rp.problem.init));
            let t = &agents[&rp.uuv].tables;
            assert!(rp.initial_state().contains(&GroundAtom::new(UNREACHABLE_PREDICATE, &["b6"])));
            assert!(validate(t, &rp.initial_state(), rp.network(), p, t.goal.as_ref()).is_valid());
        }
        let a = &out.replans[0].result.as_ref().unwrap().steps;
        assert_eq!(a[0].task.name, TRANSIT);
        assert_eq!(out.events.iter().filter(|e| e.kind == EventKind::ReplanTriggered).count(), 2);
        assert_eq!(out.events[0].kind, EventKind::Divergence);
    }

    #[test]
    fn out_of_range_member_keeps_its_plan() {
        let (mut w, mut agents, mut m) = fleet(2500.0);
        let r = run_to_divergence(&mut w, &mut m);
        let before = w.uuv("b").unwrap().queue.clone();
        let out = m.replan_episode(&r, &mut w, &mut agents, &PlannerOptions::default());
        assert_eq!(out.affected, vec!["a"]);
        assert_eq!(out.replans.len(), 1);
        assert_eq!(w.uuv("b").unwrap().queue, before);
        assert!(!w.uuv("b").unwrap().belief.contains(&GroundAtom::new(UNREACHABLE_PREDICATE, &["b6"])));
    }

    #[test]
    fn empty_remaining_plan_gives_a_warning() {
        let (mut w, mut agents, mut m) = fleet(2500.0);
        let r = run_to_divergence(&mut w, &mut m);
        let a = w.uuv_mut("a").unwrap();
        a.queue.clear();
        a.current = None;
        let out = m.replan_episode(&r, &mut w, &mut agents, &PlannerOptions::default());
        assert!(out.replans.is_empty());
        assert_eq!(out.events.iter().map(|e| e.kind).collect::<Vec<_>>(), vec![EventKind::Divergence, EventKind::Warning]);
    }

    #[test]
    fn unsolvable_replan_fails_only_that_uuv() {
        let (mut w, mut agents, mut m) = fleet(100.0);
        let r = run_to_divergence(&mut w, &mut m);
        // b8 unreachable too leaves no way to the goal for a
        w.uuv_mut("a").unwrap().belief.insert(GroundAtom::new(UNREACHABLE_PREDICATE, &["b8"]));
        w.uuv_mut("a").unwrap().belief.insert(GroundAtom::new("broadcast-sent", &["a"]));
        let out = m.replan_episode(&r, &mut w, &mut agents, &PlannerOptions::default());
        assert_eq!(w.uuv("a").unwrap().status, MissionStatus::Failed);
        assert_eq!(w.uuv("b").unwrap().status, MissionStatus::Active);
        assert!(out.events.iter().any(|e| e.kind == EventKind::MissionFailed && e.subject == "a"));
    }
}
