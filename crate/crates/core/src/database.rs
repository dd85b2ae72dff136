//! The query-time database and the fixed-time lookup.
//!
//! A query never touches geometry: placement validation is three bitset
//! membership tests per obstacle, and path selection is at most
//! `entries × obstacles` envelope lookups.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::envelope::Envelope;
use crate::robot::{self, Configuration, Path};
use crate::scenario::ScenarioContext;
use crate::worldgrid::{disk_cells, CellSet};

#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseEntry {
    pub envelope: Envelope,
    pub path: Path,
}

/// A set of envelopes for which even single-position avoidance failed.
///
/// A placement lies inside the leaf when it hits every one of its envelopes;
/// only such placements may go unanswered.
#[derive(Debug, Clone, PartialEq)]
pub struct UncoveredLeaf {
    pub envelopes: Vec<Envelope>,
}

impl UncoveredLeaf {
    /// Orders envelopes by smallest cell so equal leaves compare equal.
    pub fn new(mut envelopes: Vec<Envelope>) -> Self {
        envelopes.sort_by_key(|e| e.sorted());
        UncoveredLeaf { envelopes }
    }

    pub fn contains_placement(&self, placement: &[u32]) -> bool {
        self.envelopes.iter().all(|e| placement.iter().any(|&q| e.contains(q)))
    }
}

/// Stored paths for one goal, cheapest first.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalDatabase {
    pub goal: Configuration,
    pub entries: Vec<DatabaseEntry>,
    pub uncovered: Vec<UncoveredLeaf>,
    /// Cells within epsilon of the goal projection.
    pub near_goal: CellSet,
}

impl GoalDatabase {
    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.entries.iter().map(|e| &e.path)
    }
}

/// Why a placement is not admissible. Obstacle numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementViolation {
    WrongCount { expected: usize, got: usize },
    OutsideRegion(usize),
    BlocksStart(usize),
    NearGoal(usize),
}

impl fmt::Display for PlacementViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlacementViolation::WrongCount { expected, got } => {
                write!(f, "expected {expected} obstacle position(s), got {got}")
            }
            PlacementViolation::OutsideRegion(i) => write!(f, "obstacle {i} is outside the obstacle region"),
            PlacementViolation::BlocksStart(i) => write!(f, "obstacle {i} overlaps the start configuration"),
            PlacementViolation::NearGoal(i) => write!(f, "obstacle {i} is within epsilon of the goal"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("goal {0} is not in the database")]
    UnknownGoal(Configuration),
    #[error("invalid placement: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidPlacement(Vec<PlacementViolation>),
    #[error("no stored path avoids the placement ({lookups} lookups)")]
    NoCoverage { lookups: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryHit<'a> {
    pub path: &'a Path,
    /// Position of the returned path in the goal's entry list.
    pub entry: usize,
    /// Envelope membership tests performed.
    pub lookups: u64,
}

/// Per-goal path sets plus the admissibility sets queries validate against.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerDatabase {
    digest: String,
    obstacle_count: usize,
    region: CellSet,
    start_blockers: CellSet,
    goals: Vec<GoalDatabase>,
    index: HashMap<Configuration, usize>,
}

impl PlannerDatabase {
    pub fn new(
        digest: String,
        obstacle_count: usize,
        region: CellSet,
        start_blockers: CellSet,
        goals: Vec<GoalDatabase>,
    ) -> Self {
        let index = goals.iter().enumerate().map(|(i, g)| (g.goal, i)).collect();
        PlannerDatabase {
            digest,
            obstacle_count,
            region,
            start_blockers,
            goals,
            index,
        }
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn obstacle_count(&self) -> usize {
        self.obstacle_count
    }

    pub fn region(&self) -> &CellSet {
        &self.region
    }

    pub fn start_blockers(&self) -> &CellSet {
        &self.start_blockers
    }

    pub fn goals(&self) -> &[GoalDatabase] {
        &self.goals
    }

    pub fn goal(&self, g: &Configuration) -> Option<&GoalDatabase> {
        self.index.get(g).map(|&i| &self.goals[i])
    }

    /// Admissibility check by set membership only.
    pub fn check_placement(&self, gdb: &GoalDatabase, placement: &[u32]) -> Result<(), Vec<PlacementViolation>> {
        let mut violations = Vec::new();
        if placement.len() != self.obstacle_count {
            violations.push(PlacementViolation::WrongCount {
                expected: self.obstacle_count,
                got: placement.len(),
            });
        }
        for (i, &q) in placement.iter().enumerate() {
            if !self.region.contains(q) {
                violations.push(PlacementViolation::OutsideRegion(i + 1));
                continue;
            }
            if self.start_blockers.contains(q) {
                violations.push(PlacementViolation::BlocksStart(i + 1));
            }
            if gdb.near_goal.contains(q) {
                violations.push(PlacementViolation::NearGoal(i + 1));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// The cheapest stored path whose envelope contains no placed obstacle.
    pub fn query(&self, g: &Configuration, placement: &[u32]) -> Result<QueryHit<'_>, QueryError> {
        let gdb = self.goal(g).ok_or(QueryError::UnknownGoal(*g))?;
        self.check_placement(gdb, placement)
            .map_err(QueryError::InvalidPlacement)?;
        let mut lookups = 0u64;
        'entries: for (entry, e) in gdb.entries.iter().enumerate() {
            for &q in placement {
                lookups += 1;
                if e.envelope.contains(q) {
                    continue 'entries;
                }
            }
            return Ok(QueryHit {
                path: &e.path,
                entry,
                lookups,
            });
        }
        Err(QueryError::NoCoverage { lookups })
    }
}

/// Admissibility check from geometry: region membership, disc against the
/// start footprint, distance to the goal projection (strictly beyond epsilon).
pub fn validate_placement(
    ctx: &ScenarioContext,
    g: &Configuration,
    placement: &[u32],
) -> Result<(), Vec<PlacementViolation>> {
    let s = ctx.scenario();
    let mut violations = Vec::new();
    if placement.len() != s.obstacles.count {
        violations.push(PlacementViolation::WrongCount {
            expected: s.obstacles.count,
            got: placement.len(),
        });
    }
    let start_fp = robot::footprint(&s.model, &s.start, &s.grid).expect("validated start");
    let proj = s.model.project(g, &s.grid);
    for (i, &q) in placement.iter().enumerate() {
        if !s.obstacles.region.contains(q) {
            violations.push(PlacementViolation::OutsideRegion(i + 1));
            continue;
        }
        if disk_cells(q, s.obstacles.radius, &s.grid).intersects(&start_fp) {
            violations.push(PlacementViolation::BlocksStart(i + 1));
        }
        if s.grid.cell_center(q).distance(proj) <= s.epsilon {
            violations.push(PlacementViolation::NearGoal(i + 1));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
