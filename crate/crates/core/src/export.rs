//! GeoJSON for beacon constellations and vehicle tracks.

use serde_json::{json, Map, Value};

use crate::deploy::{BeaconGraph, DeploymentResult};
use crate::geo::{GeoError, Point2D};
use crate::sim::DepthAttribute;

/// A beacon as stored in a beacons file.
#[derive(Debug, Clone, PartialEq)]
pub struct BeaconSpec {
    pub id: String,
    pub position: Point2D,
    pub depth_attribute: DepthAttribute,
    /// Water depth at the beacon (m), when known.
    pub depth: Option<f64>,
    /// Water volume of the beacon's region (m³), when known.
    pub volume: Option<f64>,
}

/// True and estimated positions of one UUV, one sample per tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Track {
    pub uuv: String,
    pub times: Vec<f64>,
    pub truth: Vec<Point2D>,
    pub estimate: Vec<Point2D>,
}

impl Track {
    pub fn new(uuv: &str) -> Self {
        Self { uuv: uuv.to_string(), ..Default::default() }
    }

    pub fn push(&mut self, time: f64, truth: Point2D, estimate: Point2D) {
        self.times.push(time);
        self.truth.push(truth);
        self.estimate.push(estimate);
    }
}

fn coords(p: Point2D) -> Value {
    json!([p.x, p.y])
}

fn bad(msg: impl Into<String>) -> GeoError {
    GeoError::GeoJson(msg.into())
}

/// Beacon ids of a fresh deployment: `b1` .. `bN`.
pub fn deployment_beacons(result: &DeploymentResult) -> Vec<BeaconSpec> {
    result
        .beacon_positions
        .iter()
        .enumerate()
        .map(|(n, &p)| BeaconSpec {
            id: format!("b{}", n + 1),
            position: p,
            depth_attribute: DepthAttribute::Seafloor,
            depth: result.beacon_depths.get(n).copied(),
            volume: result.cell_volumes.get(n).copied(),
        })
        .collect()
}

/// Point feature per beacon, followed by the graph's links as one
/// MultiLineString feature when a graph is given.
pub fn beacons_geojson(beacons: &[BeaconSpec], graph: Option<&BeaconGraph>) -> Value {
    let mut features: Vec<Value> = beacons
        .iter()
        .map(|b| {
            let mut props = Map::new();
            props.insert("id".into(), b.id.clone().into());
            props.insert("depth_attribute".into(), serde_json::to_value(b.depth_attribute).expect("enum serializes"));
            if let Some(d) = b.depth {
                props.insert("depth".into(), d.into());
            }
            if let Some(v) = b.volume {
                props.insert("volume".into(), v.into());
            }
            json!({"type": "Feature", "geometry": {"type": "Point", "coordinates": coords(b.position)}, "properties": props})
        })
        .collect();
    if let Some(g) = graph {
        let lines: Vec<Value> = g.edges.iter().map(|&(i, j, _)| json!([coords(g.positions[i]), coords(g.positions[j])])).collect();
        let pairs: Vec<Value> = g.edges.iter().map(|&(i, j, _)| json!([beacons[i].id, beacons[j].id])).collect();
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "MultiLineString", "coordinates": lines},
            "properties": {"kind": "beacon-graph", "link_distance": g.coverage_link_distance, "links": pairs}
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}

/// Reads the Point features of a beacons file; other geometries are skipped.
pub fn read_beacons(text: &str) -> Result<Vec<BeaconSpec>, GeoError> {
    let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let features = v.get("features").and_then(Value::as_array).ok_or_else(|| bad("expected a FeatureCollection"))?;
    let mut out: Vec<BeaconSpec> = Vec::new();
    for (k, f) in features.iter().enumerate() {
        let geom = f.get("geometry").ok_or_else(|| bad(format!("feature {k} has no geometry")))?;
        if geom.get("type").and_then(Value::as_str) != Some("Point") {
            continue;
        }
        let c = geom.get("coordinates").and_then(Value::as_array).ok_or_else(|| bad(format!("feature {k}: point without coordinates")))?;
        let xy: Vec<f64> = c.iter().filter_map(Value::as_f64).collect();
        if xy.len() < 2 || xy.len() != c.len() {
            return Err(bad(format!("feature {k}: point coordinates must be numbers [x, y]")));
        }
        let props = f.get("properties");
        let prop = |key: &str| props.and_then(|p| p.get(key));
        let id = prop("id").and_then(Value::as_str).ok_or_else(|| bad(format!("feature {k}: beacon without a string 'id' property")))?;
        if out.iter().any(|b| b.id == id) {
            return Err(bad(format!("duplicate beacon id '{id}'")));
        }
        let depth_attribute = match prop("depth_attribute") {
            None => DepthAttribute::default(),
            Some(a) => serde_json::from_value(a.clone()).map_err(|_| bad(format!("beacon '{id}': unknown depth_attribute {a}")))?,
        };
        out.push(BeaconSpec {
            id: id.to_lowercase(),
            position: Point2D::new(xy[0], xy[1]),
            depth_attribute,
            depth: prop("depth").and_then(Value::as_f64),
            volume: prop("volume").and_then(Value::as_f64),
        });
    }
    if out.is_empty() {
        return Err(bad("no beacon Point features"));
    }
    Ok(out)
}

/// Two LineString features per UUV: the true track and the estimated one,
/// with the sample time of every vertex.
pub fn tracks_geojson(tracks: &[Track]) -> Value {
    let mut features = Vec::new();
    for t in tracks {
        for (kind, pts) in [("true", &t.truth), ("estimated", &t.estimate)] {
            features.push(json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": pts.iter().map(|&p| coords(p)).collect::<Vec<_>>()},
                "properties": {
                    "uuv": t.uuv,
                    "track": kind,
                    "times": t.times
                }
            }));
        }
    }
    json!({"type": "FeatureCollection", "features": features})
}
