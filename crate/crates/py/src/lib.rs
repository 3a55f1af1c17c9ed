//! Python bindings.

use std::path::PathBuf;

use beaconnav_core::config::ScenarioConfig;
use beaconnav_core::deploy::{self, DeploymentProblem};
use beaconnav_core::geo::{self, Point2D};
use beaconnav_core::hddl::{self, DomainAst, ProblemAst};
use beaconnav_core::htn::{self, PlannerOptions};
use beaconnav_core::scenario::run_scenario;
use beaconnav_core::sim::to_jsonl;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn xy(p: Point2D) -> (f64, f64) {
    (p.x, p.y)
}

#[pyclass(module = "beaconnav", frozen)]
struct Bathymetry {
    inner: geo::BathymetryGrid,
}

#[pymethods]
impl Bathymetry {
    /// Parses an ESRI ASCII grid.
    #[staticmethod]
    fn from_ascii(text: &str) -> PyResult<Self> {
        Ok(Self { inner: geo::load_ascii_grid(text).map_err(value_err)? })
    }

    #[staticmethod]
    fn flat(origin: (f64, f64), cell_size: f64, n_rows: usize, n_cols: usize, depth: f64) -> Self {
        Self { inner: geo::BathymetryGrid::flat(Point2D::new(origin.0, origin.1), cell_size, n_rows, n_cols, depth) }
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_rows, self.inner.n_cols)
    }

    #[getter]
    fn cell_size(&self) -> f64 {
        self.inner.cell_size
    }

    fn depth_at(&self, x: f64, y: f64) -> Option<f64> {
        self.inner.depth_at(Point2D::new(x, y))
    }
}

#[pyclass(module = "beaconnav", frozen)]
struct Polygon {
    inner: geo::MissionPolygon,
}

#[pymethods]
impl Polygon {
    #[new]
    fn new(vertices: Vec<(f64, f64)>) -> PyResult<Self> {
        let v = vertices.into_iter().map(|(x, y)| Point2D::new(x, y)).collect();
        Ok(Self { inner: geo::MissionPolygon::new(v).map_err(value_err)? })
    }

    #[staticmethod]
    fn from_geojson(text: &str) -> PyResult<Self> {
        Ok(Self { inner: geo::MissionPolygon::from_geojson(text).map_err(value_err)? })
    }

    #[getter]
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|&p| xy(p)).collect()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        geo::point_in_polygon(Point2D::new(x, y), &self.inner)
    }
}

/// Outcome of a volume-balanced deployment.
#[pyclass(module = "beaconnav", frozen, get_all)]
struct Deployment {
    beacon_positions: Vec<(f64, f64)>,
    beacon_depths: Vec<f64>,
    volumes: Vec<f64>,
    v_tot: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
}

#[pyfunction]
#[pyo3(signature = (grid, polygon, n_beacons, seed, max_iterations = 100, volume_tolerance = 0.05))]
fn deploy_beacons(grid: &Bathymetry, polygon: &Polygon, n_beacons: usize, seed: u64, max_iterations: usize, volume_tolerance: f64) -> PyResult<Deployment> {
    let problem = DeploymentProblem {
        grid: grid.inner.clone(),
        poly: polygon.inner.clone(),
        n_beacons,
        max_iterations,
        volume_tolerance,
        rng_seed: seed,
    };
    let r = deploy::lloyd_deploy(&problem).map_err(value_err)?;
    Ok(Deployment {
        beacon_positions: r.beacon_positions.iter().map(|&p| xy(p)).collect(),
        beacon_depths: r.beacon_depths,
        volumes: r.cell_volumes,
        v_tot: r.v_tot,
        objective: r.objective,
        iterations: r.iterations_used,
        converged: r.converged,
    })
}

#[pyclass(module = "beaconnav", frozen)]
struct BeaconGraph {
    inner: deploy::BeaconGraph,
}

#[pymethods]
impl BeaconGraph {
    #[new]
    #[pyo3(signature = (positions, link_distance = deploy::DEFAULT_LINK_DISTANCE))]
    fn new(positions: Vec<(f64, f64)>, link_distance: f64) -> PyResult<Self> {
        let p = positions.into_iter().map(|(x, y)| Point2D::new(x, y)).collect();
        Ok(Self { inner: deploy::BeaconGraph::new(p, link_distance).map_err(value_err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Links as `(i, j, length)` with `i < j`.
    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges.clone()
    }

    /// Shortest route as `(nodes, length)`, or `None` when unreachable.
    fn route(&self, start: usize, goal: usize) -> PyResult<Option<(Vec<usize>, f64)>> {
        let r = deploy::astar_route(&self.inner, start, goal).map_err(value_err)?;
        Ok(r.is_reachable().then(|| (r.nodes, r.cost)))
    }
}

#[pyclass(module = "beaconnav", frozen)]
struct Domain {
    inner: DomainAst,
}

#[pymethods]
impl Domain {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: hddl::parse_domain(text).map_err(value_err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

#[pyclass(module = "beaconnav", frozen)]
struct Problem {
    inner: ProblemAst,
}

#[pymethods]
impl Problem {
    #[staticmethod]
    fn parse(text: &str, domain: &Domain) -> PyResult<Self> {
        Ok(Self { inner: hddl::parse_problem(text, &domain.inner).map_err(value_err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

#[pyclass(module = "beaconnav", frozen)]
struct Plan {
    inner: htn::Plan,
}

#[pymethods]
impl Plan {
    /// Primitive steps as `(name, args)`.
    #[getter]
    fn steps(&self) -> Vec<(String, Vec<String>)> {
        self.inner.steps.iter().map(|s| (s.task.name.clone(), s.task.args.clone())).collect()
    }

    #[getter]
    fn nodes_expanded(&self) -> u64 {
        self.inner.stats.nodes_expanded
    }

    #[getter]
    fn backtracks(&self) -> u64 {
        self.inner.stats.backtracks
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.to_text()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(text).map_err(value_err)? })
    }
}

/// Finds a plan for the problem's own initial network; raises on failure.
#[pyfunction]
fn plan(domain: &Domain, problem: &Problem) -> PyResult<Plan> {
    let (_, p) = htn::plan_problem(&domain.inner, &problem.inner, &PlannerOptions::default()).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(Plan { inner: p })
}

/// Checks a plan against the problem; returns `(valid, reason)`.
#[pyfunction]
fn validate(domain: &Domain, problem: &Problem, plan: &Plan) -> PyResult<(bool, Option<String>)> {
    let t = hddl::ground(&domain.inner, &problem.inner).map_err(value_err)?;
    Ok(match htn::validate(&t, &t.initial_state, &t.initial_network, &plan.inner, t.goal.as_ref()) {
        htn::Verdict::Valid => (true, None),
        htn::Verdict::Invalid { reason, .. } => (false, Some(reason)),
    })
}

/// Runs a scenario file; returns `(summary_json, events_jsonl)`.
#[pyfunction]
fn simulate(config: PathBuf) -> PyResult<(String, String)> {
    let cfg = ScenarioConfig::load(&config).map_err(value_err)?;
    let run = run_scenario(&cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let summary = serde_json::to_string(&run.summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((summary, to_jsonl(&run.events)))
}

#[pymodule]
fn beaconnav(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Bathymetry>()?;
    m.add_class::<Polygon>()?;
    m.add_class::<Deployment>()?;
    m.add_class::<BeaconGraph>()?;
    m.add_class::<Domain>()?;
    m.add_class::<Problem>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(deploy_beacons, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
