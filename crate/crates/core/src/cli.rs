//! `beaconnav` command line: deploy, route, plan, simulate and validate.
//!
//! Exit codes: 0 success, 1 input error, 2 unreachable route, 3 unsolvable
//! problem or invalid plan, 4 runtime failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::deploy::{astar_route, lloyd_deploy, BeaconGraph, DeploymentProblem, DEFAULT_LINK_DISTANCE};
use crate::export::{beacons_geojson, deployment_beacons, read_beacons, tracks_geojson, BeaconSpec};
use crate::geo::{load_ascii_grid, MissionPolygon};
use crate::hddl::{ground, parse_domain, parse_problem, DomainAst, ProblemAst};
use crate::htn::{plan_problem, validate, Plan, PlanError, PlannerOptions};
use crate::scenario::{run_scenario, ScenarioError};
use crate::sim::to_jsonl;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNREACHABLE: i32 = 2;
pub const EXIT_UNSOLVABLE: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "beaconnav", version, about = "Beacon deployment, HTN planning and fleet simulation for GNSS-denied UUV navigation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Place beacons over the mission area by volume-balanced Lloyd relaxation.
    Deploy(DeployArgs),
    /// Shortest beacon-to-beacon route over the link graph.
    Route(RouteArgs),
    /// Plan one HDDL problem and check the plan.
    Plan(PlanArgs),
    /// Run a closed-loop fleet scenario.
    Simulate(SimulateArgs),
    /// Check a plan.json against a domain and problem.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct DeployArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides deploy.n_beacons.
    #[arg(long)]
    pub n_beacons: Option<usize>,
    /// Overrides output_dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    /// Scenario config; its beacons file and output_dir are used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub beacons: Option<PathBuf>,
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    #[arg(long)]
    pub link_distance: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Scenario config; with --uuv, its domain and that UUV's problem are used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, requires = "config")]
    pub uuv: Option<String>,
    #[arg(long, required_unless_present = "config")]
    pub domain: Option<PathBuf>,
    #[arg(long, required_unless_present = "uuv")]
    pub problem: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub input: ProblemArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: ProblemArgs,
    #[arg(long)]
    pub plan: PathBuf,
    /// Directory for verdict.json; the verdict is always printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl ToString) -> Self {
        Self { code: EXIT_INPUT, message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Self { code: EXIT_RUNTIME, message: message.to_string() }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let code = match &e {
            ScenarioError::Config(_) | ScenarioError::Input { .. } => EXIT_INPUT,
            ScenarioError::Unsolvable { .. } => EXIT_UNSOLVABLE,
            ScenarioError::Runtime(_) => EXIT_RUNTIME,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<i32, CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    ScenarioConfig::load(path).map_err(CliError::input)
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("outputs serialize");
    s.push('\n');
    s
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    std::fs::write(&p, content).map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))
}

fn out_dir(flag: &Option<PathBuf>, cfg: Option<&ScenarioConfig>) -> PathBuf {
    flag.clone().or_else(|| cfg.map(|c| c.output_dir.clone())).unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_deploy(a: &DeployArgs) -> CmdResult {
    let text = read(&a.config)?;
    let base = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut cfg = ScenarioConfig::from_yaml(&text, &base).map_err(CliError::input)?;
    cfg.source = Some(a.config.clone());
    let n = a.n_beacons.unwrap_or(cfg.deploy.n_beacons);
    if n == 0 {
        return Err(CliError::input("usage: the number of beacons must be at least 1"));
    }
    cfg.check().map_err(CliError::input)?;
    let grid_path = cfg.require("bathymetry", &cfg.bathymetry).map_err(CliError::input)?;
    let poly_path = cfg.require("polygon", &cfg.polygon).map_err(CliError::input)?;
    let grid = load_ascii_grid(&read(grid_path)?).map_err(|e| CliError::input(format!("{}: {e}", grid_path.display())))?;
    let poly = MissionPolygon::from_geojson(&read(poly_path)?).map_err(|e| CliError::input(format!("{}: {e}", poly_path.display())))?;
    let problem = DeploymentProblem {
        grid,
        poly,
        n_beacons: n,
        max_iterations: cfg.deploy.max_iterations,
        volume_tolerance: cfg.deploy.volume_tolerance,
        rng_seed: cfg.seed,
    };
    let result = lloyd_deploy(&problem).map_err(CliError::input)?;
    let graph = BeaconGraph::new(result.beacon_positions.clone(), cfg.deploy.link_distance).map_err(CliError::runtime)?;
    let beacons = deployment_beacons(&result);
    let target = result.v_tot / n as f64;
    let report = json!({
        "n_beacons": n,
        "seed": cfg.seed,
        "v_tot": result.v_tot,
        "target_volume": target,
        "volumes": result.cell_volumes,
        "objective": result.objective,
        "objective_ratio": result.objective / target,
        "volume_tolerance": cfg.deploy.volume_tolerance,
        "iterations": result.iterations_used,
        "converged": result.converged,
        "beacons": beacons.iter().map(|b| json!({"id": b.id, "position": [b.position.x, b.position.y], "depth": b.depth, "volume": b.volume})).collect::<Vec<_>>(),
        "generators": result.generators.iter().map(|p| json!([p.x, p.y])).collect::<Vec<_>>(),
        "weights": result.weights,
        "link_distance": cfg.deploy.link_distance,
        "links": graph.edges.iter().map(|&(i, j, d)| json!([beacons[i].id, beacons[j].id, d])).collect::<Vec<_>>(),
    });
    let dir = out_dir(&a.out, Some(&cfg));
    write(&dir, "beacons.geojson", &pretty(&beacons_geojson(&beacons, Some(&graph))))?;
    write(&dir, "deploy-report.json", &pretty(&report))?;
    println!(
        "{n} beacons, objective {:.6e} ({:.4} of V_tot/N), {} iterations, converged: {}",
        result.objective,
        result.objective / target,
        result.iterations_used,
        result.converged
    );
    Ok(EXIT_OK)
}

fn cmd_route(a: &RouteArgs) -> CmdResult {
    let cfg = a.config.as_deref().map(load_config).transpose()?;
    let path = match (&a.beacons, &cfg) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => c.require("beacons", &c.beacons).map_err(CliError::input)?.to_path_buf(),
        (None, None) => return Err(CliError::input("either --beacons or --config is required")),
    };
    let beacons: Vec<BeaconSpec> = read_beacons(&read(&path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let link = a.link_distance.or(cfg.as_ref().map(|c| c.deploy.link_distance)).unwrap_or(DEFAULT_LINK_DISTANCE);
    let index = |id: &str| {
        beacons
            .iter()
            .position(|b| b.id == id.to_lowercase())
            .ok_or_else(|| CliError::input(format!("unknown beacon id '{id}' (known: {})", beacons.iter().map(|b| b.id.as_str()).collect::<Vec<_>>().join(", "))))
    };
    let (from, to) = (index(&a.from)?, index(&a.to)?);
    let graph = BeaconGraph::new(beacons.iter().map(|b| b.position).collect(), link).map_err(CliError::input)?;
    let route = astar_route(&graph, from, to).map_err(CliError::runtime)?;
    let reachable = route.is_reachable();
    let doc = json!({
        "from": beacons[from].id,
        "to": beacons[to].id,
        "link_distance": link,
        "reachable": reachable,
        "route": route.nodes.iter().map(|&i| beacons[i].id.clone()).collect::<Vec<_>>(),
        "length": if reachable { Value::from(route.cost) } else { Value::Null },
    });
    write(&out_dir(&a.out, cfg.as_ref()), "route.json", &pretty(&doc))?;
    if reachable {
        println!("{} ({:.1} m)", doc["route"].as_array().unwrap().iter().filter_map(Value::as_str).collect::<Vec<_>>().join(" -> "), route.cost);
        Ok(EXIT_OK)
    } else {
        eprintln!("no route from {} to {} within link distance {link} m", beacons[from].id, beacons[to].id);
        Ok(EXIT_UNREACHABLE)
    }
}

struct LoadedProblem {
    domain_path: PathBuf,
    problem_path: PathBuf,
    domain: DomainAst,
    problem: ProblemAst,
    cfg: Option<ScenarioConfig>,
}

fn load_problem(a: &ProblemArgs) -> Result<LoadedProblem, CliError> {
    let cfg = a.config.as_deref().map(load_config).transpose()?;
    let domain_path = match (&a.domain, &cfg) {
        (Some(d), _) => d.clone(),
        (None, Some(c)) => c.require("domain", &c.domain).map_err(CliError::input)?.to_path_buf(),
        (None, None) => return Err(CliError::input("--domain is required")),
    };
    let problem_path = match (&a.problem, &a.uuv, &cfg) {
        (Some(p), _, _) => p.clone(),
        (None, Some(id), Some(c)) => c
            .uuvs
            .iter()
            .find(|u| u.id.eq_ignore_ascii_case(id))
            .map(|u| u.problem.clone())
            .ok_or_else(|| CliError::input(format!("no uuv '{id}' in the config")))?,
        _ => return Err(CliError::input("--problem, or --config with --uuv, is required")),
    };
    let domain = parse_domain(&read(&domain_path)?).map_err(|e| CliError::input(format!("{}:{e}", domain_path.display())))?;
    let problem = parse_problem(&read(&problem_path)?, &domain).map_err(|e| CliError::input(format!("{}:{e}", problem_path.display())))?;
    Ok(LoadedProblem { domain_path, problem_path, domain, problem, cfg })
}

fn cmd_plan(a: &PlanArgs) -> CmdResult {
    let lp = load_problem(&a.input)?;
    let (tables, plan) = match plan_problem(&lp.domain, &lp.problem, &PlannerOptions::default()) {
        Ok(r) => r,
        Err(e @ (PlanError::Unsolvable { .. } | PlanError::DepthBound { .. })) => {
            return Err(CliError { code: EXIT_UNSOLVABLE, message: format!("{}: {e}", lp.problem_path.display()) })
        }
        Err(e) => return Err(CliError::input(format!("{}: {e}", lp.problem_path.display()))),
    };
    let verdict = validate(&tables, &tables.initial_state, &tables.initial_network, &plan, tables.goal.as_ref());
    let doc = json!({
        "domain": lp.domain.name,
        "problem": lp.problem.name,
        "steps": plan.steps,
        "decomposition": plan.decomposition,
        "stats": plan.stats,
        "verdict": verdict,
    });
    let dir = out_dir(&a.out, lp.cfg.as_ref());
    write(&dir, "plan.json", &pretty(&doc))?;
    write(&dir, "plan.txt", &plan.to_text())?;
    print!("{}", plan.to_text());
    if verdict.is_valid() {
        Ok(EXIT_OK)
    } else {
        Err(CliError { code: EXIT_RUNTIME, message: format!("planner produced an invalid plan: {verdict:?}") })
    }
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let cfg = load_config(&a.config)?;
    let run = run_scenario(&cfg)?;
    let dir = out_dir(&a.out, Some(&cfg));
    write(&dir, "events.jsonl", &to_jsonl(&run.events))?;
    let mut tracks = serde_json::to_string(&tracks_geojson(&run.tracks)).expect("tracks serialize");
    tracks.push('\n');
    write(&dir, "tracks.geojson", &tracks)?;
    write(&dir, "summary.json", &pretty(&run.summary))?;
    let s = &run.summary;
    println!(
        "mission {} after {} s: {} replans, {} divergences",
        if s.mission_success { "succeeded" } else { "failed" },
        s.total_sim_time,
        s.replan_count,
        s.divergence_count
    );
    for u in &s.uuvs {
        println!("  {}: {}", u.id, if u.success { "ok" } else { "failed" });
    }
    if s.step_cap_reached {
        return Err(CliError::runtime(format!("step cap of {} ticks reached before every mission ended", cfg.step_cap)));
    }
    Ok(EXIT_OK)
}

fn cmd_validate(a: &ValidateArgs) -> CmdResult {
    let lp = load_problem(&a.input)?;
    let text = read(&a.plan)?;
    let plan: Plan = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", a.plan.display())))?;
    let tables = ground(&lp.domain, &lp.problem).map_err(|e| CliError::input(format!("{}: {e}", lp.problem_path.display())))?;
    let verdict = validate(&tables, &tables.initial_state, &tables.initial_network, &plan, tables.goal.as_ref());
    let doc = json!({
        "domain": lp.domain_path.display().to_string(),
        "problem": lp.problem_path.display().to_string(),
        "plan": a.plan.display().to_string(),
        "verdict": verdict,
    });
    if let Some(dir) = &a.out {
        write(dir, "verdict.json", &pretty(&doc))?;
    }
    print!("{}", pretty(&verdict));
    Ok(if verdict.is_valid() { EXIT_OK } else { EXIT_UNSOLVABLE })
}

pub fn execute(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Deploy(a) => cmd_deploy(a),
        Command::Route(a) => cmd_route(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
