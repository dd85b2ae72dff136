//! Envelopes: the obstacle positions that would invalidate a path.

use std::collections::HashSet;

use thiserror::Error;

use crate::robot::{Configuration, Path, RobotError};
use crate::scenario::ScenarioContext;
use crate::worldgrid::{inflate, CellSet, GridMap};

/// A set of obstacle positions (cell indices), backed by a hash set so that
/// membership is a single lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Envelope {
    positions: HashSet<u32>,
}

impl Envelope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_cells(cells: impl IntoIterator<Item = u32>) -> Self {
        Envelope {
            positions: cells.into_iter().collect(),
        }
    }

    pub fn from_set(set: &CellSet) -> Self {
        Self::from_cells(set.iter())
    }

    #[inline]
    pub fn contains(&self, cell: u32) -> bool {
        self.positions.contains(&cell)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.positions.iter().copied()
    }

    /// Positions in ascending order.
    pub fn sorted(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.iter().collect();
        v.sort_unstable();
        v
    }

    pub fn min_cell(&self) -> Option<u32> {
        self.iter().min()
    }

    pub fn is_disjoint(&self, other: &Envelope) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().all(|c| !large.contains(c))
    }

    pub fn to_cell_set(&self, universe: usize) -> CellSet {
        CellSet::from_cells(universe, self.iter())
    }
}

/// The envelope of `path` for goal `g`: every admissible region position
/// whose disc touches a cell the robot occupies along the path.
///
/// Computed as one inflation of the path's swept cells, intersected with the
/// region, with start blockers and positions within epsilon of the goal
/// removed.
pub fn construct_envelope(ctx: &ScenarioContext, path: &Path, g: &Configuration) -> Result<Envelope, RobotError> {
    let swept = ctx.space().path_cells(path)?;
    let mut reach = inflate(&swept, ctx.scenario().obstacles.radius, ctx.grid());
    reach.intersect_with(&ctx.admissible_positions(g));
    Ok(Envelope::from_set(&reach))
}

/// Workspace cells covered by an obstacle placed anywhere in any of
/// `envelopes`.
pub fn envelope_occupancy<'a>(envelopes: impl IntoIterator<Item = &'a Envelope>, ctx: &ScenarioContext) -> CellSet {
    let grid = ctx.grid();
    let mut seeds = grid.empty_set();
    for e in envelopes {
        for c in e.iter() {
            seeds.insert(c);
        }
    }
    inflate(&seeds, ctx.scenario().obstacles.radius, grid)
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("an envelope with {0} position(s) cannot be bisected")]
pub struct Unsplittable(pub usize);

/// Splits `e` along the axis with the larger coordinate span (x on ties) at
/// the mean coordinate: positions strictly below the mean go left.
pub fn bisect_envelope(e: &Envelope, grid: &GridMap) -> Result<(Envelope, Envelope), Unsplittable> {
    if e.len() < 2 {
        return Err(Unsplittable(e.len()));
    }
    let coords: Vec<(u32, u64, u64)> = e
        .iter()
        .map(|c| {
            let (x, y) = grid.coords(c);
            (c, x as u64, y as u64)
        })
        .collect();
    let span = |pick: fn(&(u32, u64, u64)) -> u64| {
        let lo = coords.iter().map(pick).min().unwrap_or(0);
        let hi = coords.iter().map(pick).max().unwrap_or(0);
        hi - lo
    };
    let pick: fn(&(u32, u64, u64)) -> u64 = if span(|t| t.1) >= span(|t| t.2) {
        |t| t.1
    } else {
        |t| t.2
    };
    // coord < sum / n, kept in integers so the split is exact
    let n = coords.len() as u64;
    let sum: u64 = coords.iter().map(pick).sum();
    let (mut left, mut right) = (Envelope::new(), Envelope::new());
    for t in &coords {
        if pick(t) * n < sum {
            left.positions.insert(t.0);
        } else {
            right.positions.insert(t.0);
        }
    }
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{footprint, RobotModel};
    use crate::scenario::fixtures;
    use crate::worldgrid::disk_cells;

    fn env(grid: &GridMap, xy: &[(usize, usize)]) -> Envelope {
        Envelope::from_cells(xy.iter().map(|&(x, y)| grid.index(x, y).unwrap()))
    }

    #[test]
    fn bisect_examples() {
        let grid = GridMap::new(8, 8, 1.0).unwrap();
        let (l, r) = bisect_envelope(&env(&grid, &[(0, 0), (4, 0), (2, 1)]), &grid).unwrap();
        assert_eq!(l, env(&grid, &[(0, 0)]));
        assert_eq!(r, env(&grid, &[(4, 0), (2, 1)]));

        let (l, r) = bisect_envelope(&env(&grid, &[(0, 0), (0, 5)]), &grid).unwrap();
        assert_eq!(l, env(&grid, &[(0, 0)]));
        assert_eq!(r, env(&grid, &[(0, 5)]));

        let (l, r) = bisect_envelope(&env(&grid, &[(0, 0), (3, 3)]), &grid).unwrap();
        assert_eq!(l, env(&grid, &[(0, 0)]));
        assert_eq!(r, env(&grid, &[(3, 3)]));

        assert_eq!(bisect_envelope(&env(&grid, &[(2, 2)]), &grid), Err(Unsplittable(1)));
        assert_eq!(bisect_envelope(&Envelope::new(), &grid), Err(Unsplittable(0)));
    }

    #[test]
    fn bisect_partitions() {
        let grid = GridMap::new(10, 10, 1.0).unwrap();
        let e = Envelope::from_cells([3, 14, 25, 26, 27, 48, 90, 91]);
        let (l, r) = bisect_envelope(&e, &grid).unwrap();
        assert!(!l.is_empty() && !r.is_empty());
        assert!(l.is_disjoint(&r));
        let mut all: Vec<u32> = l.iter().chain(r.iter()).collect();
        all.sort_unstable();
        assert_eq!(all, e.sorted());
    }

    /// Per-position disc test, independent of the distance transform.
    fn brute_envelope(ctx: &ScenarioContext, path: &Path, g: &Configuration) -> Envelope {
        let s = ctx.scenario();
        let mut touched = s.grid.empty_set();
        for w in path.waypoints() {
            touched.union_with(&footprint(&s.model, w, &s.grid).unwrap());
        }
        for pair in path.waypoints().windows(2) {
            touched.union_with(&crate::robot::sweep_footprint(&s.model, &pair[0], &pair[1], &s.grid).unwrap());
        }
        let start_fp = footprint(&s.model, &s.start, &s.grid).unwrap();
        let proj = s.model.project(g, &s.grid);
        Envelope::from_cells(s.obstacles.region.iter().filter(|&q| {
            let disc = disk_cells(q, s.obstacles.radius, &s.grid);
            disc.intersects(&touched) && !disc.intersects(&start_fp) && s.grid.cell_center(q).distance(proj) > s.epsilon
        }))
    }

    #[test]
    fn straight_path_envelope_matches_brute_force() {
        let rows = vec![".".repeat(20); 20];
        let rows: Vec<&str> = rows.iter().map(|r| r.as_str()).collect();
        let ctx = ScenarioContext::new(fixtures::from_rows(
            &rows,
            1.0,
            RobotModel::disk(0.9),
            (1, 10),
            &[(18, 10)],
            1,
            2.0,
            3.0,
            (0, 0, 19, 19),
        ))
        .unwrap();
        let g = Configuration::cell(18, 10);
        let waypoints = (1..=18).map(|x| Configuration::cell(x, 10)).collect();
        let path = Path::new(waypoints, &ctx.scenario().model, ctx.grid()).unwrap();
        let e = construct_envelope(&ctx, &path, &g).unwrap();
        assert_eq!(e, brute_envelope(&ctx, &path, &g));
        let grid = ctx.grid();
        // beside the middle of the path: inside; beside the start or goal: excluded
        assert!(e.contains(grid.index(9, 12).unwrap()));
        assert!(!e.contains(grid.index(9, 13).unwrap()));
        assert!(!e.contains(grid.index(1, 12).unwrap()));
        assert!(!e.contains(grid.index(17, 11).unwrap()));
        assert!(e.iter().all(|q| !ctx.start_blockers().contains(q)));
    }

    #[test]
    fn envelope_trivial_cases() {
        let ctx = ScenarioContext::new(fixtures::two_gap_room()).unwrap();
        let g = ctx.scenario().goals[0];
        let model = &ctx.scenario().model;
        // path hugging the left edge never reaches the region band x = 5..9
        let far = Path::new(
            (3..=7).map(|y| Configuration::cell(1, y)).rev().collect(),
            model,
            ctx.grid(),
        )
        .unwrap();
        assert!(construct_envelope(&ctx, &far, &g).unwrap().is_empty());
        let single = Path::new(vec![ctx.scenario().start], model, ctx.grid()).unwrap();
        assert!(construct_envelope(&ctx, &single, &g).unwrap().is_empty());
    }

    #[test]
    fn envelopes_of_planned_paths_match_brute_force() {
        let ctx = ScenarioContext::new(fixtures::two_gap_room()).unwrap();
        let s = ctx.scenario();
        let mut counter = crate::robot::CheckCounter::new();
        let plan = ctx
            .space()
            .find_path(&s.start, &s.goals[0], ctx.static_cells(), &s.budget, &mut counter)
            .unwrap();
        let e = construct_envelope(&ctx, &plan.path, &s.goals[0]).unwrap();
        assert!(!e.is_empty());
        assert_eq!(e, brute_envelope(&ctx, &plan.path, &s.goals[0]));
    }

    #[test]
    fn occupancy_examples() {
        let ctx = ScenarioContext::new(fixtures::two_gap_room()).unwrap();
        let grid = ctx.grid();
        let r = ctx.scenario().obstacles.radius;
        assert!(envelope_occupancy(&[], &ctx).is_empty());
        let q = grid.index(6, 6).unwrap();
        assert_eq!(
            envelope_occupancy(&[Envelope::from_cells([q])], &ctx),
            disk_cells(q, r, grid)
        );

        let a = env(grid, &[(5, 5), (6, 5), (6, 6)]);
        let b = env(grid, &[(6, 6), (9, 9), (9, 10)]);
        let mut expected = grid.empty_set();
        for q in a.iter().chain(b.iter()) {
            expected.union_with(&disk_cells(q, r, grid));
        }
        assert_eq!(envelope_occupancy([&a, &b], &ctx), expected);
    }
}
