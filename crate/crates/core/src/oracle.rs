//! Brute-force checks of the database: envelopes from per-position disc
//! tests, exhaustive or seeded placement enumeration, coverage against the
//! true obstacle occupancy, and completeness against direct replanning.
//!
//! Nothing here goes through the distance transform; only the lattice
//! primitives (footprints, sweeps, discs) are shared with production code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::database::{PlannerDatabase, QueryError};
use crate::envelope::Envelope;
use crate::io::scenario_digest;
use crate::robot::{self, is_collision_free, CheckCounter, Configuration, Path};
use crate::scenario::{Scenario, ScenarioContext};
use crate::worldgrid::{disk_cells, CellSet};

pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementMode {
    /// Every multiset of admissible positions.
    Exhaustive,
    /// Independent uniform draws, reproducible from `seed`.
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{count} placements exceed the exhaustive cap of {cap}; use sampled mode")]
    CapExceeded { count: u128, cap: u128 },
    #[error("database digest {database} does not match scenario digest {scenario}")]
    DigestMismatch { database: String, scenario: String },
    #[error("goal {0} is not in the database")]
    UnknownGoal(Configuration),
}

/// Envelope by definition: each region position whose disc touches any
/// footprint or sweep of the path, unless it touches the start or lies
/// within epsilon of the goal projection.
pub fn brute_force_envelope(scenario: &Scenario, path: &Path, g: &Configuration) -> Envelope {
    let s = scenario;
    let swept = path_checks(s, path);
    let start_fp = robot::footprint(&s.model, &s.start, &s.grid).expect("validated start");
    let proj = s.model.project(g, &s.grid);
    Envelope::from_cells(s.obstacles.region.iter().filter(|&q| {
        let disc = disk_cells(q, s.obstacles.radius, &s.grid);
        swept.iter().any(|f| f.intersects(&disc))
            && !disc.intersects(&start_fp)
            && s.grid.cell_center(q).distance(proj) > s.epsilon
    }))
}

/// Every footprint to check along `path`: waypoints, then steps.
fn path_checks(s: &Scenario, path: &Path) -> Vec<CellSet> {
    let w = path.waypoints();
    let mut out: Vec<CellSet> = w
        .iter()
        .map(|c| robot::footprint(&s.model, c, &s.grid).expect("path on lattice"))
        .collect();
    for pair in w.windows(2) {
        out.push(robot::sweep_footprint(&s.model, &pair[0], &pair[1], &s.grid).expect("adjacent waypoints"));
    }
    out
}

/// Admissible positions for goal `g`, ascending, from geometry alone.
pub fn admissible_positions(scenario: &Scenario, g: &Configuration) -> Vec<u32> {
    let s = scenario;
    let start_fp = robot::footprint(&s.model, &s.start, &s.grid).expect("validated start");
    let proj = s.model.project(g, &s.grid);
    s.obstacles
        .region
        .iter()
        .filter(|&q| {
            !disk_cells(q, s.obstacles.radius, &s.grid).intersects(&start_fp)
                && s.grid.cell_center(q).distance(proj) > s.epsilon
        })
        .collect()
}

/// Number of size-`n` multisets over `k` items, `C(k + n - 1, n)`.
pub fn multiset_count(k: u64, n: u64) -> u128 {
    if k == 0 {
        return u128::from(n == 0);
    }
    let mut acc: u128 = 1;
    for i in 0..n as u128 {
        acc = acc.saturating_mul(k as u128 + i) / (i + 1);
    }
    acc
}

/// Placement stream over a fixed admissible position list.
#[derive(Debug, Clone)]
pub enum Placements {
    Exhaustive {
        positions: Vec<u32>,
        next: Option<Vec<usize>>,
    },
    Sampled {
        positions: Vec<u32>,
        n: usize,
        remaining: usize,
        rng: Box<ChaCha8Rng>,
    },
}

impl Iterator for Placements {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        match self {
            Placements::Exhaustive { positions, next } => {
                let idx = next.as_mut()?;
                let out = idx.iter().map(|&i| positions[i]).collect();
                // advance to the next non-decreasing index tuple
                let k = positions.len();
                match idx.iter().rposition(|&i| i + 1 < k) {
                    Some(p) => {
                        let v = idx[p] + 1;
                        idx[p..].iter_mut().for_each(|i| *i = v);
                    }
                    None => *next = None,
                }
                Some(out)
            }
            Placements::Sampled {
                positions,
                n,
                remaining,
                rng,
            } => {
                if *remaining == 0 || positions.is_empty() {
                    return None;
                }
                *remaining -= 1;
                Some((0..*n).map(|_| positions[rng.gen_range(0..positions.len())]).collect())
            }
        }
    }
}

pub fn enumerate_placements(
    scenario: &Scenario,
    g: &Configuration,
    mode: PlacementMode,
    cap: u128,
) -> Result<Placements, OracleError> {
    let positions = admissible_positions(scenario, g);
    let n = scenario.obstacles.count;
    Ok(match mode {
        PlacementMode::Exhaustive => {
            let count = multiset_count(positions.len() as u64, n as u64);
            if count > cap {
                return Err(OracleError::CapExceeded { count, cap });
            }
            let next = (!positions.is_empty()).then(|| vec![0; n]);
            Placements::Exhaustive { positions, next }
        }
        PlacementMode::Sampled { count, seed } => Placements::Sampled {
            positions,
            n,
            remaining: count,
            rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverageFailure {
    NoPathReturned,
    ReturnedPathCollides {
        entry: usize,
    },
    /// The database refused a placement the oracle considers admissible.
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub goal: Configuration,
    pub placements_checked: usize,
    pub coverage_failures: Vec<(Vec<u32>, CoverageFailure)>,
    /// Unanswered placements lying inside a reported uncovered leaf.
    pub expected_uncovered_hits: usize,
    pub max_lookups: u64,
}

impl CoverageReport {
    pub fn passed(&self) -> bool {
        self.coverage_failures.is_empty()
    }

    /// Fraction of placements answered with a path, as a percentage.
    pub fn success_rate(&self) -> f64 {
        if self.placements_checked == 0 {
            return 100.0;
        }
        let failed = self.coverage_failures.len() + self.expected_uncovered_hits;
        100.0 * (self.placements_checked - failed) as f64 / self.placements_checked as f64
    }
}

pub fn check_digest(db: &PlannerDatabase, scenario: &Scenario) -> Result<(), OracleError> {
    let actual = scenario_digest(scenario);
    if db.digest() != actual {
        return Err(OracleError::DigestMismatch {
            database: db.digest().to_string(),
            scenario: actual,
        });
    }
    Ok(())
}

/// True occupancy: static cells plus every placed disc.
pub fn true_occupancy(scenario: &Scenario, placement: &[u32]) -> CellSet {
    let mut occ = scenario.grid.occupied_cells();
    for &q in placement {
        occ.union_with(&disk_cells(q, scenario.obstacles.radius, &scenario.grid));
    }
    occ
}

enum Outcome {
    Ok { lookups: u64 },
    Uncovered,
    Failed(CoverageFailure),
}

/// Queries every placement and collision-checks each returned path against
/// the true occupancy.
pub fn verify_coverage(
    db: &PlannerDatabase,
    ctx: &ScenarioContext,
    g: &Configuration,
    mode: PlacementMode,
    cap: u128,
) -> Result<CoverageReport, OracleError> {
    let s = ctx.scenario();
    check_digest(db, s)?;
    let gdb = db.goal(g).ok_or(OracleError::UnknownGoal(*g))?;
    let checks: Vec<Vec<CellSet>> = gdb.entries.iter().map(|e| path_checks(s, &e.path)).collect();
    let placements: Vec<Vec<u32>> = enumerate_placements(s, g, mode, cap)?.collect();
    let outcomes: Vec<Outcome> = placements
        .par_iter()
        .map(|p| match db.query(g, p) {
            Ok(hit) => {
                let occ = true_occupancy(s, p);
                let mut counter = CheckCounter::new();
                if checks[hit.entry]
                    .iter()
                    .all(|f| is_collision_free(f, &occ, &mut counter))
                {
                    Outcome::Ok { lookups: hit.lookups }
                } else {
                    Outcome::Failed(CoverageFailure::ReturnedPathCollides { entry: hit.entry })
                }
            }
            Err(QueryError::NoCoverage { .. }) => {
                if gdb.uncovered.iter().any(|leaf| leaf.contains_placement(p)) {
                    Outcome::Uncovered
                } else {
                    Outcome::Failed(CoverageFailure::NoPathReturned)
                }
            }
            Err(e) => Outcome::Failed(CoverageFailure::Rejected(e.to_string())),
        })
        .collect();
    let mut report = CoverageReport {
        goal: *g,
        placements_checked: placements.len(),
        coverage_failures: Vec::new(),
        expected_uncovered_hits: 0,
        max_lookups: 0,
    };
    for (p, o) in placements.into_iter().zip(outcomes) {
        match o {
            Outcome::Ok { lookups } => report.max_lookups = report.max_lookups.max(lookups),
            Outcome::Uncovered => report.expected_uncovered_hits += 1,
            Outcome::Failed(f) => report.coverage_failures.push((p, f)),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletenessReport {
    pub goal: Configuration,
    pub placements_checked: usize,
    pub direct_successes: usize,
    pub query_successes: usize,
    /// Placements where direct search found a path but the query did not.
    pub violations: Vec<Vec<u32>>,
}

impl CompletenessReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Plans directly against the true occupancy for every placement and
/// requires the query to answer wherever direct planning succeeds.
pub fn verify_completeness(
    db: &PlannerDatabase,
    ctx: &ScenarioContext,
    g: &Configuration,
    mode: PlacementMode,
    cap: u128,
) -> Result<CompletenessReport, OracleError> {
    let s = ctx.scenario();
    check_digest(db, s)?;
    db.goal(g).ok_or(OracleError::UnknownGoal(*g))?;
    let placements: Vec<Vec<u32>> = enumerate_placements(s, g, mode, cap)?.collect();
    let results: Vec<(bool, bool)> = placements
        .par_iter()
        .map(|p| {
            let occ = true_occupancy(s, p);
            let mut counter = CheckCounter::new();
            let direct = ctx
                .space()
                .find_path(&s.start, g, &occ, &s.budget, &mut counter)
                .is_ok();
            (direct, db.query(g, p).is_ok())
        })
        .collect();
    let mut report = CompletenessReport {
        goal: *g,
        placements_checked: placements.len(),
        direct_successes: 0,
        query_successes: 0,
        violations: Vec::new(),
    };
    for (p, (direct, answered)) in placements.into_iter().zip(results) {
        report.direct_successes += direct as usize;
        report.query_successes += answered as usize;
        if direct && !answered {
            report.violations.push(p);
        }
    }
    Ok(report)
}
