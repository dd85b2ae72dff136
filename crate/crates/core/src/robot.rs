//! Robot models: lattice configurations, workspace footprints, swept
//! footprints between adjacent configurations, and instrumented collision
//! checks.

use std::cell::Cell;
use std::f64::consts::{SQRT_2, TAU};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::worldgrid::{disk_cells, CellSet, GridMap, Point2};

/// Largest joint step allowed for arms, in radians (pi/8).
pub const MAX_JOINT_STEP: f64 = std::f64::consts::PI / 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobotError {
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
    #[error("configuration {config} has {found} coordinates, expected {expected}")]
    WrongDimension {
        config: Configuration,
        expected: usize,
        found: usize,
    },
    #[error("configuration {0} is outside the lattice")]
    OutOfBounds(Configuration),
    #[error("configurations {0} and {1} are not lattice neighbors")]
    NotAdjacent(Configuration, Configuration),
    #[error("path has no waypoints")]
    EmptyPath,
}

/// Integer lattice coordinates: `(ix, iy)` for a disk robot, joint indices
/// for an arm.
///
/// Ordering is lexicographic over the coordinates; every configuration of a
/// given model has the same length.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    len: u8,
    coords: [u32; 3],
}

impl Configuration {
    /// Panics unless `coords` has length 1..=3.
    pub fn new(coords: &[u32]) -> Self {
        assert!(
            (1..=3).contains(&coords.len()),
            "configurations have 1 to 3 coordinates"
        );
        let mut buf = [0; 3];
        buf[..coords.len()].copy_from_slice(coords);
        Configuration {
            len: coords.len() as u8,
            coords: buf,
        }
    }

    pub fn cell(ix: u32, iy: u32) -> Self {
        Configuration::new(&[ix, iy])
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn with(&self, axis: usize, value: u32) -> Self {
        let mut next = *self;
        next.coords[axis] = value;
        next
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        if !(1..=3).contains(&v.len()) {
            return Err(serde::de::Error::custom(format!(
                "configuration must have 1 to 3 coordinates, got {}",
                v.len()
            )));
        }
        Ok(Configuration::new(&v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskRobot {
    pub radius: f64,
}

/// Serial planar arm. Joint `m` sits at the end of link `m - 1`; joint angles
/// are relative to the previous link and quantized to `joint_steps` per turn.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarArm {
    pub base: Point2,
    pub links: Vec<f64>,
    pub halfwidth: f64,
    pub joint_steps: u32,
}

impl PlanarArm {
    pub fn joint_step(&self) -> f64 {
        TAU / self.joint_steps as f64
    }

    pub fn total_length(&self) -> f64 {
        self.links.iter().sum()
    }

    /// Link segments for continuous relative joint angles.
    pub fn segments(&self, angles: &[f64]) -> Vec<(Point2, Point2)> {
        let mut heading = 0.0;
        let mut joint = self.base;
        self.links
            .iter()
            .zip(angles)
            .map(|(&len, &theta)| {
                heading += theta;
                let tip = Point2::new(joint.x + len * heading.cos(), joint.y + len * heading.sin());
                let seg = (joint, tip);
                joint = tip;
                seg
            })
            .collect()
    }

    pub fn end_effector(&self, angles: &[f64]) -> Point2 {
        self.segments(angles).last().map(|s| s.1).unwrap_or(self.base)
    }

    fn angles(&self, c: &Configuration) -> Vec<f64> {
        let step = self.joint_step();
        c.coords().iter().map(|&j| j as f64 * step).collect()
    }

    /// Cells whose centers lie within the half-width of any link.
    pub fn footprint_at(&self, angles: &[f64], grid: &GridMap) -> CellSet {
        let mut set = grid.empty_set();
        for (a, b) in self.segments(angles) {
            grid.for_each_cell_in_box(a, b, self.halfwidth, |cell, center| {
                if point_segment_distance(center, a, b) <= self.halfwidth {
                    set.insert(cell);
                }
            });
        }
        set
    }
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(Point2::new(a.x + t * dx, a.y + t * dy))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RobotModel {
    Disk(DiskRobot),
    Arm(PlanarArm),
}

impl RobotModel {
    pub fn disk(radius: f64) -> Self {
        RobotModel::Disk(DiskRobot { radius })
    }

    pub fn validate(&self) -> Result<(), RobotError> {
        match self {
            RobotModel::Disk(d) => {
                if !(d.radius > 0.0 && d.radius.is_finite()) {
                    return Err(RobotError::InvalidModel(format!(
                        "disk radius must be positive, got {}",
                        d.radius
                    )));
                }
            }
            RobotModel::Arm(arm) => {
                if !(2..=3).contains(&arm.links.len()) {
                    return Err(RobotError::InvalidModel(format!(
                        "arm needs 2 or 3 links, got {}",
                        arm.links.len()
                    )));
                }
                if arm.links.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                    return Err(RobotError::InvalidModel("link lengths must be positive".into()));
                }
                if !(arm.halfwidth >= 0.0 && arm.halfwidth.is_finite()) {
                    return Err(RobotError::InvalidModel("link half-width must be >= 0".into()));
                }
                if arm.joint_steps == 0 || arm.joint_step() > MAX_JOINT_STEP + 1e-12 {
                    return Err(RobotError::InvalidModel(format!(
                        "joint_steps must be at least 16, got {}",
                        arm.joint_steps
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of coordinates in a configuration.
    pub fn dimension(&self) -> usize {
        match self {
            RobotModel::Disk(_) => 2,
            RobotModel::Arm(arm) => arm.links.len(),
        }
    }

    /// Extent of each lattice axis.
    pub fn axis_sizes(&self, grid: &GridMap) -> Vec<u32> {
        match self {
            RobotModel::Disk(_) => vec![grid.width() as u32, grid.height() as u32],
            RobotModel::Arm(arm) => vec![arm.joint_steps; arm.links.len()],
        }
    }

    pub fn check(&self, c: &Configuration, grid: &GridMap) -> Result<(), RobotError> {
        if c.len() != self.dimension() {
            return Err(RobotError::WrongDimension {
                config: *c,
                expected: self.dimension(),
                found: c.len(),
            });
        }
        let sizes = self.axis_sizes(grid);
        if c.coords().iter().zip(&sizes).any(|(v, n)| v >= n) {
            return Err(RobotError::OutOfBounds(*c));
        }
        Ok(())
    }

    /// Workspace point used for the goal-distance rule: the cell center for a
    /// disk robot, the end effector for an arm.
    pub fn project(&self, c: &Configuration, grid: &GridMap) -> Point2 {
        match self {
            RobotModel::Disk(_) => {
                let xy = c.coords();
                Point2::new(
                    (xy[0] as f64 + 0.5) * grid.resolution(),
                    (xy[1] as f64 + 0.5) * grid.resolution(),
                )
            }
            RobotModel::Arm(arm) => arm.end_effector(&arm.angles(c)),
        }
    }
}

/// Cells covered by the robot at configuration `c`.
pub fn footprint(model: &RobotModel, c: &Configuration, grid: &GridMap) -> Result<CellSet, RobotError> {
    model.check(c, grid)?;
    Ok(match model {
        RobotModel::Disk(d) => {
            let xy = c.coords();
            let cell = grid.index(xy[0] as usize, xy[1] as usize).expect("checked bounds");
            disk_cells(cell, d.radius, grid)
        }
        RobotModel::Arm(arm) => arm.footprint_at(&arm.angles(c), grid),
    })
}

/// Lattice moves from `c` in a fixed order.
///
/// Disk robot: `(+1,0) (0,+1) (-1,0) (0,-1) (+1,+1) (-1,+1) (-1,-1) (+1,-1)`,
/// dropping moves that leave the grid; straight moves cost `ρ`, diagonal
/// moves `ρ√2`. Arm: for each joint in order, `+1` then `-1` (wrapping), each
/// costing one joint step.
pub fn neighbors(model: &RobotModel, c: &Configuration, grid: &GridMap) -> Vec<(Configuration, f64)> {
    const MOVES: [(i64, i64); 8] = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)];
    match model {
        RobotModel::Disk(_) => {
            let xy = c.coords();
            let (x, y) = (xy[0] as i64, xy[1] as i64);
            MOVES
                .iter()
                .filter_map(|&(dx, dy)| {
                    grid.index_signed(x + dx, y + dy)?;
                    let cost = if dx != 0 && dy != 0 {
                        grid.resolution() * SQRT_2
                    } else {
                        grid.resolution()
                    };
                    Some((Configuration::cell((x + dx) as u32, (y + dy) as u32), cost))
                })
                .collect()
        }
        RobotModel::Arm(arm) => {
            let n = arm.joint_steps;
            let step = arm.joint_step();
            let mut out = Vec::with_capacity(2 * c.len());
            for (axis, &j) in c.coords().iter().enumerate() {
                out.push((c.with(axis, (j + 1) % n), step));
                out.push((c.with(axis, (j + n - 1) % n), step));
            }
            out
        }
    }
}

/// Cost of the single lattice move `a -> b`, if they are adjacent.
pub fn step_cost(model: &RobotModel, a: &Configuration, b: &Configuration, grid: &GridMap) -> Option<f64> {
    neighbors(model, a, grid)
        .into_iter()
        .find(|(n, _)| n == b)
        .map(|(_, cost)| cost)
}

/// Footprint swept while moving between adjacent configurations.
///
/// Both endpoint footprints plus interior samples spaced so that no robot
/// point moves more than half a cell between samples. The pair is sampled in
/// canonical (ascending) order, so the result is symmetric in `a` and `b`.
pub fn sweep_footprint(
    model: &RobotModel,
    a: &Configuration,
    b: &Configuration,
    grid: &GridMap,
) -> Result<CellSet, RobotError> {
    let mut swept = footprint(model, a, grid)?;
    if a == b {
        return Ok(swept);
    }
    swept.union_with(&footprint(model, b, grid)?);
    if step_cost(model, a, b, grid).is_none() {
        return Err(RobotError::NotAdjacent(*a, *b));
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let res = grid.resolution();
    match model {
        RobotModel::Disk(d) => {
            let (pa, pb) = (model.project(lo, grid), model.project(hi, grid));
            let samples = (2.0 * pa.distance(pb) / res).ceil() as usize + 1;
            for k in 1..samples - 1 {
                let t = k as f64 / (samples - 1) as f64;
                let p = Point2::new(pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y));
                swept.union_with(&grid.cells_near_point(p, d.radius));
            }
        }
        RobotModel::Arm(arm) => {
            let step = arm.joint_step();
            let axis = (0..lo.len())
                .find(|&i| lo.coords()[i] != hi.coords()[i])
                .expect("adjacent configurations differ in one joint");
            let from = lo.coords()[axis];
            let direction = if (from + 1) % arm.joint_steps == hi.coords()[axis] {
                1.0
            } else {
                -1.0
            };
            let samples = (2.0 * step * arm.total_length() / res).ceil() as usize + 1;
            let mut angles = arm.angles(lo);
            for k in 1..samples.saturating_sub(1) {
                let t = k as f64 / (samples - 1) as f64;
                angles[axis] = (from as f64 + direction * t) * step;
                swept.union_with(&arm.footprint_at(&angles, grid));
            }
        }
    }
    Ok(swept)
}

thread_local! {
    static THREAD_CHECKS: Cell<u64> = const { Cell::new(0) };
}

/// Collision checks performed through [`is_collision_free`] by a single
/// operation context.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct CheckCounter {
    checks: u64,
}

impl CheckCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.checks
    }
}

/// Total collision checks performed on the calling thread so far.
///
/// Lets a caller prove that a code path (the query) performs none without
/// having to thread a counter through it.
pub fn thread_collision_checks() -> u64 {
    THREAD_CHECKS.with(|c| c.get())
}

/// `true` iff `footprint` and `occupancy` share no cell.
#[inline]
pub fn is_collision_free(footprint: &CellSet, occupancy: &CellSet, counter: &mut CheckCounter) -> bool {
    counter.checks += 1;
    THREAD_CHECKS.with(|c| c.set(c.get() + 1));
    !footprint.intersects(occupancy)
}

/// Ordered lattice waypoints with their accumulated step cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    waypoints: Vec<Configuration>,
    cost: f64,
}

impl Path {
    /// Validates adjacency of consecutive waypoints and sums step costs in
    /// order.
    pub fn new(waypoints: Vec<Configuration>, model: &RobotModel, grid: &GridMap) -> Result<Self, RobotError> {
        let first = waypoints.first().ok_or(RobotError::EmptyPath)?;
        model.check(first, grid)?;
        let mut cost = 0.0;
        for pair in waypoints.windows(2) {
            model.check(&pair[1], grid)?;
            cost += step_cost(model, &pair[0], &pair[1], grid).ok_or(RobotError::NotAdjacent(pair[0], pair[1]))?;
        }
        Ok(Path { waypoints, cost })
    }

    pub fn waypoints(&self) -> &[Configuration] {
        &self.waypoints
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn start(&self) -> &Configuration {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &Configuration {
        self.waypoints.last().expect("paths are nonempty")
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}
