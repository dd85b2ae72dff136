//! Deterministic A* over a robot lattice with precomputed footprints.
//!
//! [`SearchSpace`] caches the footprint of every lattice configuration and the
//! swept footprint of every lattice edge, so a search only intersects bitsets.
//! An expansion budget stands in for a wall-clock timeout.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::SQRT_2;

use thiserror::Error;

use crate::robot::{self, is_collision_free, CheckCounter, Configuration, Path, RobotError, RobotModel};
use crate::worldgrid::{CellSet, GridMap};

pub const DEFAULT_MAX_EXPANSIONS: u64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub max_expansions: u64,
    pub heuristic_weight: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_expansions: DEFAULT_MAX_EXPANSIONS,
            heuristic_weight: 1.0,
        }
    }
}

impl SearchBudget {
    pub fn new(max_expansions: u64, heuristic_weight: f64) -> Result<Self, String> {
        if max_expansions == 0 {
            return Err("max_expansions must be at least 1".into());
        }
        if !(heuristic_weight >= 1.0 && heuristic_weight.is_finite()) {
            return Err(format!("heuristic_weight must be >= 1, got {heuristic_weight}"));
        }
        Ok(SearchBudget {
            max_expansions,
            heuristic_weight,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanFailure {
    #[error("start configuration is in collision")]
    InvalidStart,
    #[error(transparent)]
    InvalidConfiguration(#[from] RobotError),
    #[error("goal unreachable ({expansions} expansions)")]
    Unreachable { expansions: u64 },
    #[error("expansion budget exhausted after {expansions} expansions")]
    BudgetExceeded { expansions: u64 },
}

impl PlanFailure {
    pub fn expansions(&self) -> u64 {
        match self {
            PlanFailure::Unreachable { expansions } | PlanFailure::BudgetExceeded { expansions } => *expansions,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub path: Path,
    pub expansions: u64,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: u32,
    cost: f64,
    sweep: u32,
}

/// The robot lattice over one grid with cached collision geometry.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    model: RobotModel,
    grid: GridMap,
    strides: Vec<u32>,
    configs: Vec<Configuration>,
    footprints: Vec<CellSet>,
    edges: Vec<Vec<Edge>>,
    sweeps: Vec<CellSet>,
}

impl SearchSpace {
    pub fn new(model: RobotModel, grid: GridMap) -> Result<Self, RobotError> {
        model.validate()?;
        let sizes = model.axis_sizes(&grid);
        let mut strides = Vec::with_capacity(sizes.len());
        let mut total = 1u32;
        for &s in &sizes {
            strides.push(total);
            total *= s;
        }
        let configs: Vec<Configuration> = (0..total)
            .map(|id| {
                let coords: Vec<u32> = sizes
                    .iter()
                    .zip(&strides)
                    .map(|(&size, &stride)| (id / stride) % size)
                    .collect();
                Configuration::new(&coords)
            })
            .collect();
        let footprints = configs
            .iter()
            .map(|c| robot::footprint(&model, c, &grid))
            .collect::<Result<Vec<_>, _>>()?;

        let mut sweep_index: HashMap<(u32, u32), u32> = HashMap::new();
        let mut sweeps = Vec::new();
        let mut edges = Vec::with_capacity(configs.len());
        for (id, c) in configs.iter().enumerate() {
            let mut out = Vec::new();
            for (n, cost) in robot::neighbors(&model, c, &grid) {
                let to = Self::id_with(&strides, &n);
                let key = ((id as u32).min(to), (id as u32).max(to));
                let sweep = match sweep_index.get(&key) {
                    Some(&s) => s,
                    None => {
                        sweeps.push(robot::sweep_footprint(&model, c, &n, &grid)?);
                        let s = sweeps.len() as u32 - 1;
                        sweep_index.insert(key, s);
                        s
                    }
                };
                out.push(Edge { to, cost, sweep });
            }
            edges.push(out);
        }
        Ok(SearchSpace {
            model,
            grid,
            strides,
            configs,
            footprints,
            edges,
            sweeps,
        })
    }

    fn id_with(strides: &[u32], c: &Configuration) -> u32 {
        c.coords().iter().zip(strides).map(|(v, s)| v * s).sum()
    }

    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    pub fn grid(&self) -> &GridMap {
        &self.grid
    }

    pub fn state_count(&self) -> usize {
        self.configs.len()
    }

    pub fn state_id(&self, c: &Configuration) -> Result<u32, RobotError> {
        self.model.check(c, &self.grid)?;
        Ok(Self::id_with(&self.strides, c))
    }

    pub fn configuration(&self, id: u32) -> Configuration {
        self.configs[id as usize]
    }

    pub fn footprint(&self, c: &Configuration) -> Result<&CellSet, RobotError> {
        Ok(&self.footprints[self.state_id(c)? as usize])
    }

    /// Cached swept footprint of the lattice edge `a -> b`.
    pub fn sweep(&self, a: &Configuration, b: &Configuration) -> Result<&CellSet, RobotError> {
        let from = self.state_id(a)?;
        let to = self.state_id(b)?;
        if from == to {
            return Ok(&self.footprints[from as usize]);
        }
        self.edges[from as usize]
            .iter()
            .find(|e| e.to == to)
            .map(|e| &self.sweeps[e.sweep as usize])
            .ok_or(RobotError::NotAdjacent(*a, *b))
    }

    /// Every cell the robot touches while following `path`.
    pub fn path_cells(&self, path: &Path) -> Result<CellSet, RobotError> {
        let mut cells = self.grid.empty_set();
        for w in path.waypoints() {
            cells.union_with(self.footprint(w)?);
        }
        for pair in path.waypoints().windows(2) {
            cells.union_with(self.sweep(&pair[0], &pair[1])?);
        }
        Ok(cells)
    }

    fn heuristic(&self, a: u32, b: u32) -> f64 {
        let (ca, cb) = (self.configs[a as usize], self.configs[b as usize]);
        match &self.model {
            RobotModel::Disk(_) => {
                let dx = ca.coords()[0].abs_diff(cb.coords()[0]) as f64;
                let dy = ca.coords()[1].abs_diff(cb.coords()[1]) as f64;
                let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
                ((hi - lo) + SQRT_2 * lo) * self.grid.resolution()
            }
            RobotModel::Arm(arm) => {
                let n = arm.joint_steps;
                let worst = ca
                    .coords()
                    .iter()
                    .zip(cb.coords())
                    .map(|(&x, &y)| {
                        let d = x.abs_diff(y);
                        d.min(n - d)
                    })
                    .max()
                    .unwrap_or(0);
                worst as f64 * arm.joint_step()
            }
        }
    }

    /// A* from `start` to `goal` avoiding every cell of `blocked`.
    ///
    /// A configuration is enterable when its footprint and the swept
    /// footprint of the step into it are both free. Among equal f-values the
    /// larger g wins, then the lexicographically smaller configuration.
    pub fn find_path(
        &self,
        start: &Configuration,
        goal: &Configuration,
        blocked: &CellSet,
        budget: &SearchBudget,
        counter: &mut CheckCounter,
    ) -> Result<Plan, PlanFailure> {
        let s = self.state_id(start)?;
        let t = self.state_id(goal)?;
        if !is_collision_free(&self.footprints[s as usize], blocked, counter) {
            return Err(PlanFailure::InvalidStart);
        }
        let n = self.configs.len();
        let mut best = vec![f64::INFINITY; n];
        let mut parent = vec![u32::MAX; n];
        let mut closed = vec![false; n];
        // 0 unknown, 1 free, 2 blocked
        let mut state_free = vec![0u8; n];
        state_free[s as usize] = 1;
        let mut open = BinaryHeap::new();
        let w = budget.heuristic_weight;
        best[s as usize] = 0.0;
        open.push(OpenEntry {
            f: w * self.heuristic(s, t),
            g: 0.0,
            config: self.configs[s as usize],
            id: s,
        });
        let mut expansions = 0u64;
        while let Some(entry) = open.pop() {
            let id = entry.id as usize;
            if closed[id] || entry.g > best[id] {
                continue;
            }
            if entry.id == t {
                return Ok(Plan {
                    path: self.rebuild(&parent, t),
                    expansions,
                });
            }
            if expansions >= budget.max_expansions {
                return Err(PlanFailure::BudgetExceeded { expansions });
            }
            expansions += 1;
            closed[id] = true;
            for edge in &self.edges[id] {
                let to = edge.to as usize;
                if closed[to] {
                    continue;
                }
                if state_free[to] == 0 {
                    state_free[to] = if is_collision_free(&self.footprints[to], blocked, counter) {
                        1
                    } else {
                        2
                    };
                }
                if state_free[to] == 2 {
                    continue;
                }
                let g = entry.g + edge.cost;
                if g >= best[to] {
                    continue;
                }
                if !is_collision_free(&self.sweeps[edge.sweep as usize], blocked, counter) {
                    continue;
                }
                best[to] = g;
                parent[to] = entry.id;
                open.push(OpenEntry {
                    f: g + w * self.heuristic(edge.to, t),
                    g,
                    config: self.configs[to],
                    id: edge.to,
                });
            }
        }
        Err(PlanFailure::Unreachable { expansions })
    }

    fn rebuild(&self, parent: &[u32], goal: u32) -> Path {
        let mut ids = vec![goal];
        let mut cur = goal;
        while parent[cur as usize] != u32::MAX {
            cur = parent[cur as usize];
            ids.push(cur);
        }
        let waypoints = ids.into_iter().rev().map(|i| self.configs[i as usize]).collect();
        Path::new(waypoints, &self.model, &self.grid).expect("search only follows lattice edges")
    }
}

#[derive(Debug)]
struct OpenEntry {
    f: f64,
    g: f64,
    config: Configuration,
    id: u32,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    // BinaryHeap pops the greatest: smaller f, then larger g, then smaller config
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.config.cmp(&self.config))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::PlanarArm;
    use crate::worldgrid::Point2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Plain Dijkstra straight from the robot primitives, no caches.
    fn dijkstra_cost(
        model: &RobotModel,
        grid: &GridMap,
        start: Configuration,
        goal: Configuration,
        blocked: &CellSet,
    ) -> Option<f64> {
        use std::collections::BTreeMap;
        let free = |c: &Configuration| !robot::footprint(model, c, grid).unwrap().intersects(blocked);
        if !free(&start) {
            return None;
        }
        let mut dist: BTreeMap<Configuration, f64> = BTreeMap::new();
        let mut done = std::collections::BTreeSet::new();
        dist.insert(start, 0.0);
        loop {
            let next = dist
                .iter()
                .filter(|(c, _)| !done.contains(*c))
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(c, d)| (*c, *d));
            let (c, d) = next?;
            if c == goal {
                return Some(d);
            }
            done.insert(c);
            for (n, cost) in robot::neighbors(model, &c, grid) {
                if done.contains(&n) || !free(&n) {
                    continue;
                }
                if robot::sweep_footprint(model, &c, &n, grid).unwrap().intersects(blocked) {
                    continue;
                }
                let nd = d + cost;
                if dist.get(&n).is_none_or(|&old| nd < old) {
                    dist.insert(n, nd);
                }
            }
        }
    }

    fn open_grid(w: usize, h: usize) -> GridMap {
        GridMap::new(w, h, 1.0).unwrap()
    }

    #[test]
    fn start_equals_goal() {
        let space = SearchSpace::new(RobotModel::disk(0.5), open_grid(5, 5)).unwrap();
        let c = Configuration::cell(2, 3);
        let plan = space
            .find_path(
                &c,
                &c,
                &space.grid().empty_set(),
                &SearchBudget::default(),
                &mut CheckCounter::new(),
            )
            .unwrap();
        assert_eq!(plan.path.waypoints(), &[c]);
        assert_eq!(plan.path.cost(), 0.0);
    }

    #[test]
    fn diagonal_across_empty_grid() {
        let space = SearchSpace::new(RobotModel::disk(0.4), open_grid(5, 5)).unwrap();
        let empty = space.grid().empty_set();
        let (s, g) = (Configuration::cell(0, 0), Configuration::cell(4, 4));
        let plan = space
            .find_path(&s, &g, &empty, &SearchBudget::default(), &mut CheckCounter::new())
            .unwrap();
        let oracle = dijkstra_cost(space.model(), space.grid(), s, g, &empty).unwrap();
        assert!((oracle - 4.0 * SQRT_2).abs() < 1e-12);
        assert!((plan.path.cost() - oracle).abs() < 1e-12);
        assert_eq!(plan.path.len(), 5);
    }

    #[test]
    fn walled_goal_is_unreachable() {
        let mut grid = open_grid(7, 7);
        for (x, y) in [(4, 4), (5, 4), (6, 4), (4, 5), (4, 6)] {
            grid.set_occupied(grid.index(x, y).unwrap(), true);
        }
        let space = SearchSpace::new(RobotModel::disk(0.5), grid).unwrap();
        let blocked = space.grid().occupied_cells();
        let res = space.find_path(
            &Configuration::cell(0, 0),
            &Configuration::cell(6, 6),
            &blocked,
            &SearchBudget::default(),
            &mut CheckCounter::new(),
        );
        assert!(matches!(res, Err(PlanFailure::Unreachable { .. })));
        let res = space.find_path(
            &Configuration::cell(4, 4),
            &Configuration::cell(0, 0),
            &blocked,
            &SearchBudget::default(),
            &mut CheckCounter::new(),
        );
        assert_eq!(res, Err(PlanFailure::InvalidStart));
    }

    #[test]
    fn budget_is_monotone_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut grid = open_grid(16, 12);
        for c in 0..grid.cell_count() as u32 {
            if rng.gen_bool(0.2) {
                grid.set_occupied(c, true);
            }
        }
        let (s, g) = (Configuration::cell(0, 0), Configuration::cell(15, 11));
        grid.set_occupied(grid.index(0, 0).unwrap(), false);
        grid.set_occupied(grid.index(15, 11).unwrap(), false);
        let space = SearchSpace::new(RobotModel::disk(0.5), grid).unwrap();
        let blocked = space.grid().occupied_cells();
        let full = space
            .find_path(&s, &g, &blocked, &SearchBudget::default(), &mut CheckCounter::new())
            .unwrap();
        let again = space
            .find_path(&s, &g, &blocked, &SearchBudget::default(), &mut CheckCounter::new())
            .unwrap();
        assert_eq!(full, again);
        let tight = SearchBudget::new(full.expansions, 1.0).unwrap();
        assert_eq!(
            space
                .find_path(&s, &g, &blocked, &tight, &mut CheckCounter::new())
                .unwrap(),
            full
        );
        let roomy = SearchBudget::new(full.expansions + 1000, 1.0).unwrap();
        assert_eq!(
            space
                .find_path(&s, &g, &blocked, &roomy, &mut CheckCounter::new())
                .unwrap(),
            full
        );
        if full.expansions > 1 {
            let short = SearchBudget::new(full.expansions - 1, 1.0).unwrap();
            assert!(matches!(
                space.find_path(&s, &g, &blocked, &short, &mut CheckCounter::new()),
                Err(PlanFailure::BudgetExceeded { .. })
            ));
        }
    }

    #[test]
    fn astar_matches_dijkstra_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..30 {
            let (w, h) = (rng.gen_range(4..14), rng.gen_range(4..14));
            let mut grid = open_grid(w, h);
            let density = rng.gen_range(0.0..0.35);
            for c in 0..grid.cell_count() as u32 {
                if rng.gen_bool(density) {
                    grid.set_occupied(c, true);
                }
            }
            let radius = if trial % 3 == 0 { 1.0 } else { 0.5 };
            let space = SearchSpace::new(RobotModel::disk(radius), grid).unwrap();
            let blocked = space.grid().occupied_cells();
            let s = Configuration::cell(rng.gen_range(0..w as u32), rng.gen_range(0..h as u32));
            let g = Configuration::cell(rng.gen_range(0..w as u32), rng.gen_range(0..h as u32));
            let oracle = dijkstra_cost(space.model(), space.grid(), s, g, &blocked);
            let res = space.find_path(&s, &g, &blocked, &SearchBudget::default(), &mut CheckCounter::new());
            match (oracle, res) {
                (Some(c), Ok(plan)) => assert!((c - plan.path.cost()).abs() < 1e-9, "trial {trial}"),
                (None, Err(_)) => {}
                (o, r) => panic!("trial {trial}: oracle {o:?} vs search {r:?}"),
            }
        }
    }

    #[test]
    fn arm_search_matches_dijkstra() {
        let mut grid = GridMap::new(20, 20, 0.1).unwrap();
        for y in 12..20 {
            grid.set_occupied(grid.index(9, y).unwrap(), true);
        }
        let model = RobotModel::Arm(PlanarArm {
            base: Point2::new(1.0, 1.0),
            links: vec![0.5, 0.35],
            halfwidth: 0.04,
            joint_steps: 16,
        });
        let space = SearchSpace::new(model, grid).unwrap();
        let blocked = space.grid().occupied_cells();
        let s = Configuration::new(&[0, 0]);
        let g = Configuration::new(&[8, 2]);
        let plan = space
            .find_path(&s, &g, &blocked, &SearchBudget::default(), &mut CheckCounter::new())
            .unwrap();
        let oracle = dijkstra_cost(space.model(), space.grid(), s, g, &blocked).unwrap();
        assert!((plan.path.cost() - oracle).abs() < 1e-9);
        for pair in plan.path.waypoints().windows(2) {
            assert!(!space.sweep(&pair[0], &pair[1]).unwrap().intersects(&blocked));
        }
    }

    #[test]
    fn weighted_search_stays_valid() {
        let space = SearchSpace::new(RobotModel::disk(0.5), open_grid(12, 12)).unwrap();
        let blocked = space.grid().empty_set();
        let budget = SearchBudget::new(1000, 3.0).unwrap();
        let plan = space
            .find_path(
                &Configuration::cell(0, 0),
                &Configuration::cell(11, 5),
                &blocked,
                &budget,
                &mut CheckCounter::new(),
            )
            .unwrap();
        assert_eq!(plan.path.end(), &Configuration::cell(11, 5));
        assert!(SearchBudget::new(0, 1.0).is_err());
        assert!(SearchBudget::new(10, 0.5).is_err());
    }
}
