//! Helpers shared by the integration suites: reference scenarios and
//! independent brute-force oracles for the numeric kernels.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::path::PathBuf;

use altpaths::io::parse_scenario_str;
use altpaths::robot::{self, Configuration, RobotModel};
use altpaths::scenario::Scenario;
use altpaths::worldgrid::{lattice_distance, CellSet, GridMap};
use rand::Rng;

pub const OPEN_ROOM: &str = "open_room.toml";
pub const CORRIDOR: &str = "two_gap_corridor.toml";
pub const SHELF: &str = "shelf.toml";
pub const ARM: &str = "arm_reach.toml";

/// Disk scenarios used for the coverage and completeness properties.
pub const DISK_SCENARIOS: [&str; 3] = [OPEN_ROOM, CORRIDOR, SHELF];
pub const ALL_SCENARIOS: [&str; 4] = [OPEN_ROOM, CORRIDOR, SHELF, ARM];

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

/// A reference scenario with its obstacle count replaced by `n`.
pub fn reference(name: &str, n: usize) -> Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).unwrap();
    assert!(text.contains("count = 1"), "{name} must declare count = 1");
    parse_scenario_str(&text.replace("count = 1", &format!("count = {n}"))).unwrap()
}

/// Quadratic-time distance from every cell to the nearest seed.
pub fn brute_distances(seeds: &CellSet, grid: &GridMap) -> Vec<f64> {
    let seeds: Vec<u32> = seeds.iter().collect();
    (0..grid.cell_count() as u32)
        .map(|c| {
            seeds
                .iter()
                .map(|&s| lattice_distance(grid.squared_cell_offset(c, s), grid.resolution()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn brute_inflate(seeds: &CellSet, radius: f64, grid: &GridMap) -> CellSet {
    let d = brute_distances(seeds, grid);
    CellSet::from_cells(
        grid.cell_count(),
        (0..grid.cell_count() as u32).filter(|&c| d[c as usize] <= radius),
    )
}

pub fn random_cells(rng: &mut impl Rng, grid: &GridMap, density: f64) -> CellSet {
    CellSet::from_cells(
        grid.cell_count(),
        (0..grid.cell_count() as u32).filter(|_| rng.gen_bool(density)),
    )
}

#[derive(PartialEq)]
struct Item(f64, Configuration);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Uniform-cost search built directly on the robot primitives, without the
/// precomputed search space.
pub fn dijkstra_cost(
    model: &RobotModel,
    grid: &GridMap,
    start: Configuration,
    goal: Configuration,
    blocked: &CellSet,
) -> Option<f64> {
    let free = |c: &Configuration| !robot::footprint(model, c, grid).unwrap().intersects(blocked);
    if !free(&start) {
        return None;
    }
    let mut best: HashMap<Configuration, f64> = HashMap::from([(start, 0.0)]);
    let mut heap = BinaryHeap::from([Item(0.0, start)]);
    while let Some(Item(d, c)) = heap.pop() {
        if d > best[&c] {
            continue;
        }
        if c == goal {
            return Some(d);
        }
        for (n, cost) in robot::neighbors(model, &c, grid) {
            let nd = d + cost;
            if best.get(&n).is_some_and(|&old| old <= nd) {
                continue;
            }
            if !free(&n) || robot::sweep_footprint(model, &c, &n, grid).unwrap().intersects(blocked) {
                continue;
            }
            best.insert(n, nd);
            heap.push(Item(nd, n));
        }
    }
    None
}
