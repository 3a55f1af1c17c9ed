//! Volume-balanced Lloyd relaxation over a power diagram.
//!
//! Each iteration assigns every in-polygon water cell to the site with the
//! smallest power distance `|c - s|² - w`, raises the weight of under-full
//! regions (and lowers it for over-full ones) toward the common target
//! `V_tot / N`, then moves each site to the volume-weighted centroid of its
//! region, snapped to the nearest deployable water cell.
//!
//! The run stops once the mean absolute volume deviation is within tolerance
//! and the sites have stayed centred in their regions for
//! [`SETTLE_ITERATIONS`] consecutive iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::DeployError;
use crate::geo::{water_cells_in, BathymetryGrid, MissionPolygon, Point2D};

/// Weight step size, as a fraction of the squared mean site spacing.
pub const WEIGHT_STEP: f64 = 0.5;
/// Consecutive centred iterations required before declaring convergence.
pub const SETTLE_ITERATIONS: usize = 2;

#[derive(Debug, Clone)]
pub struct DeploymentProblem {
    pub grid: BathymetryGrid,
    pub poly: MissionPolygon,
    pub n_beacons: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the objective, as a fraction of `V_tot / N`.
    pub volume_tolerance: f64,
    pub rng_seed: u64,
}

impl DeploymentProblem {
    pub fn validate(&self) -> Result<(), DeployError> {
        if self.n_beacons == 0 {
            return Err(DeployError::InvalidProblem("n_beacons must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(DeployError::InvalidProblem("max_iterations must be at least 1".into()));
        }
        if !(self.volume_tolerance > 0.0 && self.volume_tolerance < 1.0) {
            return Err(DeployError::InvalidProblem(format!(
                "volume_tolerance must lie in (0, 1), got {}",
                self.volume_tolerance
            )));
        }
        Ok(())
    }
}

/// The in-polygon water cells of a grid, with their centers and volumes.
#[derive(Debug, Clone)]
pub struct WaterRegion {
    /// Grid indices, ascending.
    pub cells: Vec<usize>,
    pub centers: Vec<Point2D>,
    pub volumes: Vec<f64>,
    pub depths: Vec<f64>,
    /// Grid index -> position in `cells`.
    slot: Vec<Option<usize>>,
    cell_area: f64,
}

impl WaterRegion {
    pub fn new(grid: &BathymetryGrid, poly: &MissionPolygon) -> Self {
        let cells = water_cells_in(grid, poly);
        let area = grid.cell_area();
        let mut slot = vec![None; grid.len()];
        for (k, &i) in cells.iter().enumerate() {
            slot[i] = Some(k);
        }
        Self {
            centers: cells.iter().map(|&i| grid.cell_center(i)).collect(),
            volumes: cells.iter().map(|&i| grid.depth[i] * area).collect(),
            depths: cells.iter().map(|&i| grid.depth[i]).collect(),
            cells,
            slot,
            cell_area: area,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Region slot of the cell center nearest to `p` (lowest slot on ties).
    pub fn nearest(&self, p: Point2D) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, c) in self.centers.iter().enumerate() {
            let d = c.distance_sq(&p);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }

    /// Like [`nearest`](Self::nearest), but answers in O(1) when `p` falls in
    /// a region cell of `grid`.
    fn snap(&self, grid: &BathymetryGrid, p: Point2D) -> usize {
        match grid.cell_at(p).and_then(|i| self.slot[i]) {
            // a cell containing p holds the nearest center unless p sits on a
            // cell edge, where both candidates are equidistant anyway
            Some(k) => k,
            None => self.nearest(p),
        }
    }
}

/// Site index for every cell of a [`WaterRegion`], in region order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellAssignment {
    /// Grid indices of the assigned cells.
    pub cells: Vec<usize>,
    /// `site[k]` is the site owning `cells[k]`.
    pub site: Vec<usize>,
}

impl CellAssignment {
    pub fn site_of_grid_cell(&self, grid_index: usize) -> Option<usize> {
        self.cells.binary_search(&grid_index).ok().map(|k| self.site[k])
    }
}

fn power_assign(centers: &[Point2D], sites: &[Point2D], weights: &[f64]) -> Vec<usize> {
    centers
        .iter()
        .map(|c| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (n, (s, w)) in sites.iter().zip(weights).enumerate() {
                let d = c.distance_sq(s) - w;
                if d < best_d {
                    best = n;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Assigns every in-polygon water cell to the site of least power distance
/// `|center - site|² - weight`; ties go to the lowest site index.
pub fn assign_cells(
    sites: &[Point2D],
    weights: &[f64],
    grid: &BathymetryGrid,
    poly: &MissionPolygon,
) -> Result<CellAssignment, DeployError> {
    if sites.is_empty() {
        return Err(DeployError::InvalidProblem("no sites to assign cells to".into()));
    }
    if sites.len() != weights.len() {
        return Err(DeployError::InvalidProblem(format!(
            "{} sites but {} weights",
            sites.len(),
            weights.len()
        )));
    }
    let region = WaterRegion::new(grid, poly);
    Ok(CellAssignment { site: power_assign(&region.centers, sites, weights), cells: region.cells })
}

/// Mean absolute deviation of the per-beacon volumes from `v_tot / N`.
pub fn objective(volumes: &[f64], v_tot: f64) -> Result<f64, DeployError> {
    if volumes.is_empty() {
        return Err(DeployError::EmptyVolumes);
    }
    let n = volumes.len() as f64;
    let target = v_tot / n;
    Ok(volumes.iter().map(|v| (v - target).abs()).sum::<f64>() / n)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeploymentResult {
    /// Deployment positions: volume-weighted centroids of the final regions,
    /// snapped to water-cell centers.
    pub beacon_positions: Vec<Point2D>,
    /// Seafloor depth at each beacon position.
    pub beacon_depths: Vec<f64>,
    /// Volume `V_n` of each final region (m³).
    pub cell_volumes: Vec<f64>,
    pub v_tot: f64,
    pub objective: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Power-diagram sites and weights that produced `assignment`.
    pub generators: Vec<Point2D>,
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub assignment: CellAssignment,
}

fn farthest_point_seeds(region: &WaterRegion, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let first = rng.random_range(0..region.len());
    let mut chosen = vec![first];
    let mut min_d: Vec<f64> = region.centers.iter().map(|c| c.distance_sq(&region.centers[first])).collect();
    while chosen.len() < n {
        let mut best = 0;
        let mut best_d = -1.0;
        for (k, &d) in min_d.iter().enumerate() {
            if d > best_d {
                best = k;
                best_d = d;
            }
        }
        chosen.push(best);
        let c = region.centers[best];
        for (k, d) in min_d.iter_mut().enumerate() {
            *d = d.min(region.centers[k].distance_sq(&c));
        }
    }
    chosen
}

/// True when `centroid` lies within one cell of `site` along both axes. The
/// slack absorbs the one-column wobble of regions on a discrete grid.
fn centred(site: Point2D, centroid: Point2D, cell_size: f64) -> bool {
    let slack = cell_size * (1.0 + 1e-9);
    (site.x - centroid.x).abs() <= slack && (site.y - centroid.y).abs() <= slack
}

fn region_volumes(region: &WaterRegion, site_of: &[usize], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for (k, &s) in site_of.iter().enumerate() {
        v[s] += region.volumes[k];
    }
    v
}

/// Volume-weighted centroid of each site's region; `None` for empty regions.
pub(crate) fn region_centroids(region: &WaterRegion, site_of: &[usize], n: usize) -> Vec<Option<Point2D>> {
    let mut acc = vec![(0.0, 0.0, 0.0); n];
    for (k, &s) in site_of.iter().enumerate() {
        let (c, v) = (region.centers[k], region.volumes[k]);
        acc[s].0 += c.x * v;
        acc[s].1 += c.y * v;
        acc[s].2 += v;
    }
    acc.into_iter()
        .map(|(x, y, v)| (v > 0.0).then(|| Point2D::new(x / v, y / v)))
        .collect()
}

pub fn lloyd_deploy(problem: &DeploymentProblem) -> Result<DeploymentResult, DeployError> {
    problem.validate()?;
    let n = problem.n_beacons;
    let grid = &problem.grid;
    let region = WaterRegion::new(grid, &problem.poly);
    if region.len() < n {
        return Err(DeployError::TooFewWaterCells { cells: region.len(), beacons: n });
    }
    let v_tot = region.total_volume();
    let target = v_tot / n as f64;
    let spacing_sq = region.len() as f64 * region.cell_area / n as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(problem.rng_seed);
    let mut sites: Vec<Point2D> =
        farthest_point_seeds(&region, n, &mut rng).into_iter().map(|k| region.centers[k]).collect();
    let mut weights = vec![0.0; n];

    let mut iteration = 0;
    let mut settled_for = 0;
    loop {
        iteration += 1;
        let site_of = power_assign(&region.centers, &sites, &weights);
        let volumes = region_volumes(&region, &site_of, n);
        let obj = objective(&volumes, v_tot)?;
        let centroids = region_centroids(&region, &site_of, n);
        let centroidal = centroids.iter().zip(&sites).all(|(c, s)| c.is_some_and(|c| centred(*s, c, grid.cell_size)));
        settled_for = if centroidal { settled_for + 1 } else { 0 };
        let converged = target == 0.0 || (obj <= problem.volume_tolerance * target && settled_for >= SETTLE_ITERATIONS);

        if converged || iteration >= problem.max_iterations {
            let slots: Vec<usize> = centroids
                .iter()
                .zip(&sites)
                .map(|(c, s)| region.snap(grid, c.unwrap_or(*s)))
                .collect();
            return Ok(DeploymentResult {
                beacon_positions: slots.iter().map(|&k| region.centers[k]).collect(),
                beacon_depths: slots.iter().map(|&k| region.depths[k]).collect(),
                cell_volumes: volumes,
                v_tot,
                objective: obj,
                iterations_used: iteration,
                converged,
                generators: sites,
                weights,
                assignment: CellAssignment { cells: region.cells.clone(), site: site_of },
            });
        }

        for (w, v) in weights.iter_mut().zip(&volumes) {
            *w += WEIGHT_STEP * (target - v) / target * spacing_sq;
        }
        for (s, c) in sites.iter_mut().zip(&centroids) {
            match c {
                Some(c) if !centred(*s, *c, grid.cell_size) => *s = region.centers[region.snap(grid, *c)],
                _ => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_square(cells: usize) -> (BathymetryGrid, MissionPolygon) {
        let grid = BathymetryGrid::flat(Point2D::new(0.0, 0.0), 10.0, cells, cells, 10.0);
        let side = cells as f64 * 10.0;
        let poly = MissionPolygon::rectangle(Point2D::new(0.0, 0.0), Point2D::new(side, side)).unwrap();
        (grid, poly)
    }

    fn problem(cells: usize, n: usize) -> DeploymentProblem {
        let (grid, poly) = flat_square(cells);
        DeploymentProblem { grid, poly, n_beacons: n, max_iterations: 100, volume_tolerance: 0.05, rng_seed: 7 }
    }

    #[test]
    fn objective_examples() {
        assert_eq!(objective(&[50.0, 50.0], 100.0).unwrap(), 0.0);
        assert_eq!(objective(&[60.0, 40.0], 100.0).unwrap(), 10.0);
        assert_eq!(objective(&[100.0], 100.0).unwrap(), 0.0);
        assert_eq!(objective(&[], 100.0), Err(DeployError::EmptyVolumes));
    }

    #[test]
    fn equidistant_cell_goes_to_lowest_site() {
        let (grid, poly) = flat_square(3);
        // cell 4 is the middle one, center (15, 15)
        let sites = [Point2D::new(5.0, 15.0), Point2D::new(25.0, 15.0)];
        let a = assign_cells(&sites, &[0.0, 0.0], &grid, &poly).unwrap();
        assert_eq!(a.site_of_grid_cell(4), Some(0));
    }

    #[test]
    fn single_site_takes_everything() {
        let (grid, poly) = flat_square(5);
        let a = assign_cells(&[Point2D::new(1.0, 1.0)], &[0.0], &grid, &poly).unwrap();
        assert_eq!(a.cells.len(), 25);
        assert!(a.site.iter().all(|&s| s == 0));
    }

    #[test]
    fn weight_flips_boundary_cell_exactly_at_power_tie() {
        let (grid, poly) = flat_square(10);
        let sites = [Point2D::new(15.0, 15.0), Point2D::new(75.0, 55.0)];
        // cell (row 5, col 3): center (35, 45), nearer to site 0
        let cell = 5 * 10 + 3;
        let c = grid.cell_center(cell);
        let critical = c.distance_sq(&sites[1]) - c.distance_sq(&sites[0]);
        assert!(critical > 0.0);
        let owner = |w1: f64| assign_cells(&sites, &[0.0, w1], &grid, &poly).unwrap().site_of_grid_cell(cell);
        assert_eq!(owner(critical - 1e-6), Some(0));
        assert_eq!(owner(critical), Some(0));
        assert_eq!(owner(critical + 1e-6), Some(1));
    }

    #[test]
    fn assignment_matches_brute_force_power_distance() {
        let (grid, poly) = flat_square(12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(1..6);
            let sites: Vec<Point2D> =
                (0..n).map(|_| Point2D::new(rng.random_range(0.0..120.0), rng.random_range(0.0..120.0))).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.random_range(-500.0..500.0)).collect();
            let a = assign_cells(&sites, &weights, &grid, &poly).unwrap();
            for (k, &cell) in a.cells.iter().enumerate() {
                let c = grid.cell_center(cell);
                let pd: Vec<f64> = sites.iter().zip(&weights).map(|(s, w)| c.distance_sq(s) - w).collect();
                let own = pd[a.site[k]];
                for (j, &d) in pd.iter().enumerate() {
                    assert!(own < d || (own == d && a.site[k] <= j));
                }
            }
        }
    }

    #[test]
    fn single_beacon_sits_at_region_centroid() {
        let r = lloyd_deploy(&problem(21, 1)).unwrap();
        assert!(r.converged);
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.beacon_positions, vec![Point2D::new(105.0, 105.0)]);
    }

    #[test]
    fn more_beacons_than_cells_is_an_error() {
        let err = lloyd_deploy(&problem(2, 5)).unwrap_err();
        assert_eq!(err, DeployError::TooFewWaterCells { cells: 4, beacons: 5 });
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = problem(4, 2);
        p.volume_tolerance = 1.0;
        assert!(lloyd_deploy(&p).is_err());
        p.volume_tolerance = 0.05;
        p.max_iterations = 0;
        assert!(lloyd_deploy(&p).is_err());
    }

    #[test]
    fn centroid_step_never_increases_energy() {
        let (grid, poly) = flat_square(30);
        let region = WaterRegion::new(&grid, &poly);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.random_range(2..7);
            let sites: Vec<Point2D> =
                (0..n).map(|_| region.centers[rng.random_range(0..region.len())]).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.random_range(-2000.0..2000.0)).collect();
            let site_of = power_assign(&region.centers, &sites, &weights);
            let centroids = region_centroids(&region, &site_of, n);
            for (s, centroid) in centroids.iter().enumerate() {
                let Some(c) = centroid else { continue };
                let moved = region.centers[region.snap(&grid, *c)];
                let energy = |p: Point2D| -> f64 {
                    site_of
                        .iter()
                        .enumerate()
                        .filter(|(_, &o)| o == s)
                        .map(|(k, _)| region.volumes[k] * region.centers[k].distance_sq(&p))
                        .sum()
                };
                assert!(energy(moved) <= energy(sites[s]) + 1e-6);
            }
        }
    }

    #[test]
    fn deployment_is_deterministic() {
        let p = problem(60, 4);
        let a = lloyd_deploy(&p).unwrap();
        let b = lloyd_deploy(&p).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.assignment, b.assignment);
    }
}
