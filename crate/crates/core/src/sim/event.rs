//! Simulation events and their JSONL form.

use std::cmp::Ordering;

use serde::Serialize;
use serde_json::{Map, Value};

pub const EVENT_SCHEMA_VERSION: u32 = 1;

/// Event kinds. The declaration order is the tie-break order for events of
/// one subject at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    ActionStarted,
    Detection,
    BroadcastSent,
    BroadcastReceived,
    WaypointReached,
    ActionCompleted,
    ActionFailed,
    Divergence,
    Warning,
    ReplanTriggered,
    MissionCompleted,
    MissionFailed,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ActionStarted => "action-started",
            EventKind::Detection => "detection",
            EventKind::BroadcastSent => "broadcast-sent",
            EventKind::BroadcastReceived => "broadcast-received",
            EventKind::WaypointReached => "waypoint-reached",
            EventKind::ActionCompleted => "action-completed",
            EventKind::ActionFailed => "action-failed",
            EventKind::Divergence => "divergence",
            EventKind::Warning => "warning",
            EventKind::ReplanTriggered => "replan-triggered",
            EventKind::MissionCompleted => "mission-completed",
            EventKind::MissionFailed => "mission-failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub subject: String,
    pub payload: Map<String, Value>,
}

#[derive(Serialize)]
struct Line<'a> {
    v: u32,
    #[serde(flatten)]
    event: &'a Event,
}

impl Event {
    pub fn new(time: f64, kind: EventKind, subject: &str) -> Self {
        Self { time, kind, subject: subject.to_string(), payload: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.payload.insert(key.to_string(), value.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.payload.get(key)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.payload.get(key).and_then(Value::as_str)
    }

    /// One JSONL line, tagged with the schema version.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&Line { v: EVENT_SCHEMA_VERSION, event: self }).expect("events serialize")
    }

    pub fn order(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.subject.cmp(&other.subject))
            .then_with(|| self.kind.cmp(&other.kind))
    }
}

/// Stable sort by (time, subject, kind).
pub fn sort_events(events: &mut [Event]) {
    events.sort_by(Event::order);
}

pub fn to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_json_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_carries_version_and_kebab_kind() {
        let e = Event::new(12.0, EventKind::BroadcastSent, "uuv1").with("atoms", Vec::<String>::new());
        assert_eq!(e.to_json_line(), r#"{"v":1,"time":12.0,"kind":"broadcast-sent","subject":"uuv1","payload":{"atoms":[]}}"#);
    }

    #[test]
    fn ordering_key() {
        let mut v = vec![
            Event::new(2.0, EventKind::ActionStarted, "a"),
            Event::new(1.0, EventKind::ActionCompleted, "b"),
            Event::new(1.0, EventKind::Detection, "b"),
            Event::new(1.0, EventKind::MissionFailed, "a"),
        ];
        sort_events(&mut v);
        let got: Vec<_> = v.iter().map(|e| (e.time, e.subject.as_str(), e.kind)).collect();
        assert_eq!(
            got,
            vec![
                (1.0, "a", EventKind::MissionFailed),
                (1.0, "b", EventKind::Detection),
                (1.0, "b", EventKind::ActionCompleted),
                (2.0, "a", EventKind::ActionStarted),
            ]
        );
    }
}
