//! One tick of the world and the execution semantics of primitive actions.

use serde_json::{json, Value};

use super::*;

enum Outcome {
    Running,
    Completed,
    Failed(String),
}

fn task_json(t: &TaskInstance) -> Vec<Value> {
    t.args.iter().map(|a| Value::from(a.as_str())).collect()
}

fn point_json(p: Point2D) -> Value {
    json!([p.x, p.y])
}

/// Heading and one-tick speed that bring `from` to `to`, capped at `cruise`.
fn steer(from: Point2D, to: Point2D, cruise: f64, tick: f64) -> (f64, f64) {
    let d = from.distance(&to);
    if d <= 1e-9 {
        return (0.0, 0.0);
    }
    ((to.y - from.y).atan2(to.x - from.x), cruise.min(d / tick))
}

/// Sends the sender's estimated position and its unreachable-beacon facts to
/// every other UUV within comm range. Receivers merge the facts into their
/// belief and take the position as their rally point.
pub fn broadcast(world: &mut WorldState, sender: usize, time: f64) -> Vec<Event> {
    let s = &world.uuvs[sender];
    let position = s.estimated_position;
    let origin = s.true_position;
    let sender_id = s.id.clone();
    let atoms: Vec<GroundAtom> = s.belief.iter().filter(|a| a.predicate == UNREACHABLE_PREDICATE).cloned().collect();
    let atom_text: Vec<Value> = atoms.iter().map(|a| Value::from(a.to_string())).collect();
    let mut events =
        vec![Event::new(time, EventKind::BroadcastSent, &sender_id).with("position", point_json(position)).with("atoms", atom_text.clone())];
    let range = world.params.comm_range;
    for (i, r) in world.uuvs.iter_mut().enumerate() {
        if i == sender || r.true_position.distance(&origin) > range {
            continue;
        }
        for a in &atoms {
            r.belief.insert(a.clone());
        }
        r.rally = Some(position);
        events.push(
            Event::new(time, EventKind::BroadcastReceived, &r.id)
                .with("from", sender_id.as_str())
                .with("position", point_json(position))
                .with("atoms", atom_text.clone()),
        );
    }
    events
}

fn execute(world: &mut WorldState, i: usize, time: f64, events: &mut Vec<Event>, broadcasts: &mut Vec<usize>) -> Outcome {
    let params = world.params;
    let (task, phase) = {
        let a = world.uuvs[i].current.as_ref().expect("an action is running");
        (a.action.task.clone(), a.phase)
    };
    let arg = |k: usize| task.args.get(k).map(String::as_str).unwrap_or("");
    let uid = world.uuvs[i].id.clone();
    match task.name.as_str() {
        "navigate-to-beacon" => {
            let Some(beacon) = world.beacon(arg(2)).cloned() else {
                return Outcome::Failed(format!("unknown beacon '{}'", arg(2)));
            };
            let u = &mut world.uuvs[i];
            let (h, v) = steer(u.estimated_position, beacon.position, u.cruise_speed, params.tick);
            advance(u, h, v, &params);
            if sense_beacon(u, &beacon, time) {
                let range = u.true_position.distance(&beacon.position);
                events.push(Event::new(time, EventKind::Detection, &uid).with("beacon", beacon.id.as_str()).with("range", range));
                return Outcome::Completed;
            }
            Outcome::Running
        }
        "sense-beacon" => {
            let Some(beacon) = world.beacon(arg(1)).cloned() else {
                return Outcome::Failed(format!("unknown beacon '{}'", arg(1)));
            };
            let u = &mut world.uuvs[i];
            advance(u, u.heading, 0.0, &params);
            if sense_beacon(u, &beacon, time) {
                let range = u.true_position.distance(&beacon.position);
                events.push(Event::new(time, EventKind::Detection, &uid).with("beacon", beacon.id.as_str()).with("range", range));
                return Outcome::Completed;
            }
            Outcome::Running
        }
        "circle-localize" => {
            let Some(beacon) = world.beacon(arg(1)).cloned() else {
                return Outcome::Failed(format!("unknown beacon '{}'", arg(1)));
            };
            let r = params.standoff_radius;
            let u = &mut world.uuvs[i];
            let next_phase = match phase {
                Phase::Underway | Phase::Homing => {
                    let d = u.true_position.distance(&beacon.position);
                    if d - r > 0.0 {
                        let h = (beacon.position.y - u.true_position.y).atan2(beacon.position.x - u.true_position.x);
                        advance(u, h, u.cruise_speed.min((d - r) / params.tick), &params);
                    } else {
                        advance(u, u.heading, 0.0, &params);
                    }
                    let d = u.true_position.distance(&beacon.position);
                    let slack = 1.0 + params.current.distance(&Point2D::new(0.0, 0.0)) * params.tick;
                    if d - r <= slack { Phase::Circling { elapsed: 0.0 } } else { Phase::Homing }
                }
                Phase::Circling { elapsed } => {
                    let p = u.true_position;
                    let theta = (p.y - beacon.position.y).atan2(p.x - beacon.position.x);
                    let step = u.cruise_speed * params.tick / r;
                    let target = Point2D::new(
                        beacon.position.x + r * (theta + step).cos(),
                        beacon.position.y + r * (theta + step).sin(),
                    );
                    let (h, v) = steer(p, target, u.cruise_speed, params.tick);
                    advance(u, h, v, &params);
                    Phase::Circling { elapsed: elapsed + params.tick }
                }
            };
            if is_pulse_instant(time, beacon.pulse_period) && !sense_beacon(u, &beacon, time) {
                return Outcome::Failed(format!("lost the signal of {}", beacon.id));
            }
            u.current.as_mut().unwrap().phase = next_phase;
            if let Phase::Circling { elapsed } = next_phase {
                if elapsed >= params.circle_duration_for(u.cruise_speed) - 1e-9 {
                    circle_localize(u, &beacon, &params);
                    return Outcome::Completed;
                }
            }
            Outcome::Running
        }
        "broadcast" => {
            let u = &mut world.uuvs[i];
            advance(u, u.heading, 0.0, &params);
            broadcasts.push(i);
            Outcome::Completed
        }
        "await-broadcast" => {
            let u = &mut world.uuvs[i];
            advance(u, u.heading, 0.0, &params);
            if u.rally.is_some() { Outcome::Completed } else { Outcome::Running }
        }
        "transit-leg" => {
            let Some(target) = world.location_for(&world.uuvs[i], arg(2)) else {
                return Outcome::Failed(format!("position of '{}' is unknown", arg(2)));
            };
            let u = &mut world.uuvs[i];
            let (h, v) = steer(u.estimated_position, target, u.cruise_speed, params.tick);
            advance(u, h, v, &params);
            if u.estimated_position.distance(&target) <= params.arrival_radius {
                events.push(
                    Event::new(time, EventKind::WaypointReached, &uid)
                        .with("location", arg(2))
                        .with("position", point_json(u.estimated_position)),
                );
                return Outcome::Completed;
            }
            Outcome::Running
        }
        other => Outcome::Failed(format!("no execution semantics for action '{other}'")),
    }
}

/// Advances the world by one tick. Each active UUV starts its next action if
/// idle and then runs it for the tick; at most one action per UUV completes
/// per tick. Broadcasts are delivered after every UUV has moved.
pub fn step(world: &mut WorldState) -> Vec<Event> {
    let before = world.sim_time();
    world.tick_index += 1;
    let time = world.sim_time();
    world.apply_schedule(before, time);

    let mut events = Vec::new();
    let mut broadcasts = Vec::new();
    for i in 0..world.uuvs.len() {
        if world.uuvs[i].status != MissionStatus::Active {
            continue;
        }
        if world.uuvs[i].current.is_none() {
            let u = &mut world.uuvs[i];
            match u.queue.pop_front() {
                Some(action) => {
                    events.push(
                        Event::new(time, EventKind::ActionStarted, &u.id)
                            .with("action", action.task.name.as_str())
                            .with("args", task_json(&action.task))
                            .with("step", action.index),
                    );
                    u.current = Some(ActiveAction { action, started_at: time, phase: Phase::Underway });
                }
                None => {
                    u.status = MissionStatus::Completed;
                    u.speed = 0.0;
                    events.push(Event::new(time, EventKind::MissionCompleted, &u.id));
                    continue;
                }
            }
        }
        match execute(world, i, time, &mut events, &mut broadcasts) {
            Outcome::Running => {}
            Outcome::Completed => {
                let u = &mut world.uuvs[i];
                let done = u.current.take().unwrap().action;
                for d in &done.del {
                    u.belief.remove(d);
                }
                for a in &done.add {
                    u.belief.insert(a.clone());
                }
                u.steps_completed += 1;
                events.push(
                    Event::new(time, EventKind::ActionCompleted, &u.id)
                        .with("action", done.task.name.as_str())
                        .with("args", task_json(&done.task))
                        .with("step", done.index),
                );
                if u.queue.is_empty() {
                    u.status = MissionStatus::Completed;
                    u.speed = 0.0;
                    events.push(Event::new(time, EventKind::MissionCompleted, &u.id));
                }
            }
            Outcome::Failed(reason) => {
                let u = &mut world.uuvs[i];
                let failed = u.current.take().unwrap().action;
                u.queue.clear();
                u.status = MissionStatus::Failed;
                u.speed = 0.0;
                events.push(
                    Event::new(time, EventKind::ActionFailed, &u.id)
                        .with("action", failed.task.name.as_str())
                        .with("args", task_json(&failed.task))
                        .with("step", failed.index)
                        .with("reason", reason.as_str()),
                );
                events.push(Event::new(time, EventKind::MissionFailed, &u.id).with("reason", reason));
            }
        }
    }
    for s in broadcasts {
        events.extend(broadcast(world, s, time));
    }
    sort_events(&mut events);
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(uuvs: Vec<UuvState>, beacons: Vec<BeaconState>) -> WorldState {
        WorldState::new(WorldParams::default(), uuvs, beacons, BTreeMap::new(), Vec::new(), 1).unwrap()
    }

    fn action(index: usize, name: &str, args: &[&str]) -> PlannedAction {
        PlannedAction {
            index,
            task: TaskInstance { name: name.into(), args: args.iter().map(|s| s.to_string()).collect() },
            add: vec![],
            del: vec![],
        }
    }

    #[test]
    fn idle_world_is_still() {
        let mut u = UuvState::new("u1", Point2D::new(5.0, 5.0), 1.0, 1.0);
        u.status = MissionStatus::Completed;
        let mut w = world(vec![u], vec![]);
        let before = w.uuvs.clone();
        assert!(step(&mut w).is_empty());
        assert_eq!(w.uuvs, before);
        assert_eq!(w.sim_time(), 1.0);
    }

    #[test]
    fn broadcast_reaches_only_uuvs_in_range_in_id_order() {
        let at = |id: &str, x: f64| UuvState::new(id, Point2D::new(x, 0.0), 1.0, 0.0);
        let mut w = world(vec![at("s", 0.0), at("r2", 1500.0), at("r1", -1500.0), at("far", 2500.0)], vec![]);
        let s = w.uuvs.iter().position(|u| u.id == "s").unwrap();
        let mut ev = broadcast(&mut w, s, 3.0);
        sort_events(&mut ev);
        let got: Vec<_> = ev.iter().map(|e| (e.kind, e.subject.as_str())).collect();
        assert_eq!(
            got,
            vec![(EventKind::BroadcastReceived, "r1"), (EventKind::BroadcastReceived, "r2"), (EventKind::BroadcastSent, "s")]
        );
        assert_eq!(w.uuv("r1").unwrap().rally, Some(Point2D::new(0.0, 0.0)));
        assert_eq!(w.uuv("far").unwrap().rally, None);
    }

    #[test]
    fn navigate_completes_on_detection_and_next_action_waits_a_tick() {
        let b = BeaconState::new("b", Point2D::new(2030.0, 0.0), 2000.0, 10.0).unwrap();
        let mut u = UuvState::new("u", Point2D::new(0.0, 0.0), 1.5, 0.0);
        u.install_plan(vec![action(0, "navigate-to-beacon", &["u", "s", "b"]), action(1, "sense-beacon", &["u", "b"])]);
        let mut w = world(vec![u], vec![b]);
        let mut log = Vec::new();
        while w.sim_time() < 40.0 {
            log.extend(step(&mut w));
        }
        let kinds: Vec<_> = log.iter().map(|e| (e.time, e.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                (1.0, EventKind::ActionStarted),
                (20.0, EventKind::Detection),
                (20.0, EventKind::ActionCompleted),
                (21.0, EventKind::ActionStarted),
                (30.0, EventKind::Detection),
                (30.0, EventKind::ActionCompleted),
                (30.0, EventKind::MissionCompleted),
            ]
        );
    }

    fn circle_run(start_x: f64, current: Point2D, silence_at: Option<f64>) -> (Vec<Event>, WorldState) {
        let b = BeaconState::new("b", Point2D::new(0.0, 0.0), 2000.0, 10.0).unwrap();
        let mut u = UuvState::new("u", Point2D::new(start_x, 0.0), 1.5, 500.0);
        u.install_plan(vec![action(0, "circle-localize", &["u", "b"])]);
        let params = WorldParams { current, ..WorldParams::default() };
        let schedule = silence_at.map(|t| vec![BeaconSwitch { beacon: "b".into(), time: t, active: false }]).unwrap_or_default();
        let mut w = WorldState::new(params, vec![u], vec![b], BTreeMap::new(), schedule, 1).unwrap();
        let mut log = Vec::new();
        while !w.all_done() && w.sim_time() < 2000.0 {
            log.extend(step(&mut w));
        }
        (log, w)
    }

    #[test]
    fn circle_resets_uncertainty_and_ignores_current_for_timing() {
        let (_, w) = circle_run(400.0, Point2D::new(0.0, 0.0), None);
        assert_eq!(w.uuvs[0].position_uncertainty, 5.0);
        // starting on the standoff circle isolates the circling time
        let (log, _) = circle_run(50.0, Point2D::new(0.0, 0.0), None);
        let done = log.iter().find(|e| e.kind == EventKind::ActionCompleted).unwrap().time;
        let (log2, w2) = circle_run(50.0, Point2D::new(0.2, 0.1), None);
        assert_eq!(w2.uuvs[0].position_uncertainty, 5.0);
        let done2 = log2.iter().find(|e| e.kind == EventKind::ActionCompleted).unwrap().time;
        assert_eq!(done, done2);
        // one tick to confirm the standoff, then the full circle
        assert_eq!(done, 1.0 + (2.0 * std::f64::consts::PI * 50.0 / 1.5).ceil());
    }

    #[test]
    fn silenced_beacon_fails_the_circle() {
        let (log, w) = circle_run(400.0, Point2D::new(0.0, 0.0), Some(300.0));
        let failed = log.iter().find(|e| e.kind == EventKind::ActionFailed).unwrap();
        assert_eq!(failed.time, 300.0);
        assert!(log.iter().any(|e| e.kind == EventKind::MissionFailed));
        assert!(w.uuvs[0].position_uncertainty > 500.0);
    }
}
