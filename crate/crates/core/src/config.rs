//! Scenario files: YAML with paths relative to the file itself.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::deploy::DEFAULT_LINK_DISTANCE;
use crate::geo::Point2D;
use crate::monitor::DEFAULT_MARGIN;
use crate::sim::{BeaconSwitch, WorldParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Yaml { path: PathBuf, message: String },
    #[error("{path}: {field} refers to a missing file {target}")]
    MissingFile { path: PathBuf, field: String, target: PathBuf },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeployConfig {
    pub n_beacons: usize,
    pub max_iterations: usize,
    pub volume_tolerance: f64,
    pub link_distance: f64,
}

impl Default for DeployConfig {
    fn default() -> Self {
        Self { n_beacons: 5, max_iterations: 100, volume_tolerance: 0.05, link_distance: DEFAULT_LINK_DISTANCE }
    }
}

fn default_speed() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UuvConfig {
    pub id: String,
    /// Name of a waypoint or beacon.
    pub start: String,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default)]
    pub initial_uncertainty: f64,
    pub problem: PathBuf,
}

fn default_pulse() -> f64 {
    10.0
}
fn default_range() -> f64 {
    crate::deploy::ACOUSTIC_RANGE
}
fn default_margin() -> f64 {
    DEFAULT_MARGIN
}
fn default_step_cap() -> u64 {
    100_000
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub domain: Option<PathBuf>,
    pub beacons: Option<PathBuf>,
    pub bathymetry: Option<PathBuf>,
    pub polygon: Option<PathBuf>,
    #[serde(default)]
    pub deploy: DeployConfig,
    #[serde(default)]
    pub world: WorldParams,
    #[serde(default = "default_pulse")]
    pub pulse_period: f64,
    #[serde(default = "default_range")]
    pub acoustic_range: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_step_cap")]
    pub step_cap: u64,
    #[serde(default)]
    pub waypoints: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub uuvs: Vec<UuvConfig>,
    #[serde(default)]
    pub beacon_schedule: Vec<BeaconSwitch>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// File the config was read from, if any.
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Parses YAML text; relative paths are resolved against `base`.
    pub fn from_yaml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let origin = base.to_path_buf();
        let mut c: ScenarioConfig =
            serde_yaml::from_str(text).map_err(|e| ConfigError::Yaml { path: origin.clone(), message: e.to_string() })?;
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut c.domain, &mut c.beacons, &mut c.bathymetry, &mut c.polygon].into_iter().flatten() {
            join(p);
        }
        for u in &mut c.uuvs {
            join(&mut u.problem);
        }
        join(&mut c.output_dir);
        Ok(c)
    }

    /// Reads a config file and checks that every path it names exists.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut c = Self::from_yaml(&text, &base)?;
        c.source = Some(path.to_path_buf());
        c.check()?;
        Ok(c)
    }

    fn origin(&self) -> PathBuf {
        self.source.clone().unwrap_or_else(|| PathBuf::from("<config>"))
    }

    /// Referenced files exist and the numeric parameters are usable.
    pub fn check(&self) -> Result<(), ConfigError> {
        let mut files: Vec<(String, &PathBuf)> = Vec::new();
        for (name, p) in [("domain", &self.domain), ("beacons", &self.beacons), ("bathymetry", &self.bathymetry), ("polygon", &self.polygon)] {
            if let Some(p) = p {
                files.push((name.to_string(), p));
            }
        }
        for u in &self.uuvs {
            files.push((format!("uuvs[{}].problem", u.id), &u.problem));
        }
        for (field, target) in files {
            if !target.is_file() {
                return Err(ConfigError::MissingFile { path: self.origin(), field, target: target.clone() });
            }
        }
        let invalid = |message: String| Err(ConfigError::Invalid { path: self.origin(), message });
        if !(self.pulse_period > 0.0) || !(self.acoustic_range > 0.0) {
            return invalid("pulse_period and acoustic_range must be positive".into());
        }
        if !(self.margin >= 0.0) {
            return invalid(format!("margin must be nonnegative, got {}", self.margin));
        }
        let mut ids: Vec<&str> = self.uuvs.iter().map(|u| u.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return invalid(format!("duplicate uuv id '{}'", w[0]));
        }
        for u in &self.uuvs {
            if !(u.speed > 0.0) || !(u.initial_uncertainty >= 0.0) {
                return invalid(format!("uuv '{}': speed must be positive and initial_uncertainty nonnegative", u.id));
            }
        }
        Ok(())
    }

    pub fn waypoint_positions(&self) -> BTreeMap<String, Point2D> {
        self.waypoints.iter().map(|(k, v)| (k.to_lowercase(), Point2D::new(v[0], v[1]))).collect()
    }

    /// `field` of the config, or an error naming it.
    pub fn require<'a>(&self, field: &str, value: &'a Option<PathBuf>) -> Result<&'a Path, ConfigError> {
        value.as_deref().ok_or_else(|| ConfigError::Invalid { path: self.origin(), message: format!("'{field}' is required for this command") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_relative_paths() {
        let c = ScenarioConfig::from_yaml("seed: 3\ndomain: d.hddl\nuuvs:\n  - {id: u, start: s, problem: p/u.hddl}\n", Path::new("/data")).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.domain.as_deref(), Some(Path::new("/data/d.hddl")));
        assert_eq!(c.uuvs[0].problem, Path::new("/data/p/u.hddl"));
        assert_eq!(c.uuvs[0].speed, 1.5);
        assert_eq!(c.output_dir, Path::new("/data/out"));
        assert_eq!(c.world, WorldParams::default());
        assert_eq!(c.pulse_period, 10.0);
    }

    #[test]
    fn seed_is_required() {
        let e = ScenarioConfig::from_yaml("domain: d.hddl\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("seed"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::from_yaml("seed: 1\nsede: 2\n", Path::new(".")).is_err());
    }

    #[test]
    fn missing_file_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.yaml");
        std::fs::write(&p, "seed: 1\nbathymetry: nowhere.asc\n").unwrap();
        let e = ScenarioConfig::load(&p).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("bathymetry") && msg.contains("nowhere.asc"), "{msg}");
    }

    #[test]
    fn world_parameters_parse() {
        let c = ScenarioConfig::from_yaml("seed: 1\nworld: {tick: 0.5, current: {x: 0.1, y: 0.0}, comm_range: 1500}\n", Path::new(".")).unwrap();
        assert_eq!(c.world.tick, 0.5);
        assert_eq!(c.world.current, Point2D::new(0.1, 0.0));
        assert_eq!(c.world.comm_range, 1500.0);
        assert_eq!(c.world.drift_rate, 0.02);
    }
}
