//! Offline construction of per-goal alternative path sets.
//!
//! For every goal, a first path is planned against the static map only. Then,
//! once per movable obstacle, each path found in the previous round is
//! answered by a new path that avoids the occupancy of its own envelope and
//! of everything its predecessors avoided. When no such path exists, one of
//! the avoided envelopes is bisected and both halves are tried, recursively,
//! down to single positions.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::database::{DatabaseEntry, GoalDatabase, PlannerDatabase, UncoveredLeaf};
use crate::envelope::{bisect_envelope, construct_envelope, envelope_occupancy, Envelope};
use crate::io::scenario_digest;
use crate::planner::PlanFailure;
use crate::robot::{CheckCounter, Configuration, Path};
use crate::scenario::ScenarioContext;

/// A path together with its envelope and the envelopes it was planned around.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path: Path,
    pub cost: f64,
    pub envelope: Envelope,
    pub avoided: Vec<Envelope>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoalReport {
    /// Distinct paths stored for the goal.
    pub paths_found: usize,
    pub bisections: usize,
    /// Failed searches after the first path.
    pub planner_failures: usize,
    /// Deepest nesting of bisections along one recursion chain.
    pub max_bisection_depth: usize,
    pub expansions: u64,
    pub uncovered: Vec<UncoveredLeaf>,
    /// One entry per top-level bisection recursion.
    pub recursions: Vec<RecursionStat>,
    pub elapsed: Duration,
}

/// Shape of one bisection recursion: the envelope sizes it started from and
/// the deepest bisection chain it produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecursionStat {
    pub initial_sizes: Vec<usize>,
    pub max_depth: usize,
}

impl RecursionStat {
    /// Chain length if every bisection halved its envelope: the sum over
    /// starting envelopes of ceil(log2 |e|).
    pub fn balanced_bound(&self) -> usize {
        self.initial_sizes
            .iter()
            .map(|&n| (usize::BITS - n.saturating_sub(1).leading_zeros()) as usize)
            .sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("no path from start to goal {goal}: {reason}")]
    FirstPathFailed { goal: Configuration, reason: PlanFailure },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalOutcome {
    pub goal: Configuration,
    pub result: Result<GoalReport, PreprocessError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessReport {
    pub goals: Vec<GoalOutcome>,
    pub expansions: u64,
    pub elapsed: Duration,
}

impl PreprocessReport {
    pub fn failures(&self) -> impl Iterator<Item = &GoalOutcome> {
        self.goals.iter().filter(|o| o.result.is_err())
    }
}

/// Search state for one goal.
pub struct GoalRun<'a> {
    ctx: &'a ScenarioContext,
    goal: Configuration,
    counter: CheckCounter,
    report: GoalReport,
    tree_depth: usize,
}

impl<'a> GoalRun<'a> {
    pub fn new(ctx: &'a ScenarioContext, goal: Configuration) -> Self {
        GoalRun {
            ctx,
            goal,
            counter: CheckCounter::new(),
            report: GoalReport::default(),
            tree_depth: 0,
        }
    }

    pub fn report(&self) -> &GoalReport {
        &self.report
    }

    /// Collision checks spent by this run's searches.
    pub fn collision_checks(&self) -> u64 {
        self.counter.count()
    }

    /// Plans from the start around the static map and the occupancy of
    /// `avoided`.
    pub fn plan(&mut self, avoided: &[Envelope]) -> Result<Path, PlanFailure> {
        let s = self.ctx.scenario();
        let mut blocked = envelope_occupancy(avoided, self.ctx);
        blocked.union_with(self.ctx.static_cells());
        let result = self
            .ctx
            .space()
            .find_path(&s.start, &self.goal, &blocked, &s.budget, &mut self.counter);
        match result {
            Ok(plan) => {
                self.report.expansions += plan.expansions;
                Ok(plan.path)
            }
            Err(failure) => {
                self.report.expansions += failure.expansions();
                Err(failure)
            }
        }
    }

    pub fn record(&self, path: Path, avoided: Vec<Envelope>) -> PathRecord {
        let envelope = construct_envelope(self.ctx, &path, &self.goal).expect("planned paths follow the lattice");
        assert!(
            avoided.iter().all(|e| e.is_disjoint(&envelope)),
            "a path planned around an envelope must not be invalidated by it"
        );
        PathRecord {
            cost: path.cost(),
            path,
            envelope,
            avoided,
        }
    }

    /// Pops the largest envelope (ties: smallest minimum cell), bisects it and
    /// plans around each half together with the rest; failures recurse.
    /// When the popped envelope is a single position, the whole set is
    /// recorded as an uncovered leaf.
    pub fn bisect_and_find_more(&mut self, envelopes: Vec<Envelope>) -> Vec<PathRecord> {
        let initial_sizes = envelopes.iter().map(Envelope::len).collect();
        self.tree_depth = 0;
        let found = self.bisect_at_depth(envelopes, 1);
        self.report.recursions.push(RecursionStat {
            initial_sizes,
            max_depth: self.tree_depth,
        });
        found
    }

    fn bisect_at_depth(&mut self, mut envelopes: Vec<Envelope>, depth: usize) -> Vec<PathRecord> {
        let Some(pick) = (0..envelopes.len()).max_by(|&a, &b| {
            let (ea, eb) = (&envelopes[a], &envelopes[b]);
            ea.len().cmp(&eb.len()).then(eb.min_cell().cmp(&ea.min_cell()))
        }) else {
            return Vec::new();
        };
        if envelopes[pick].len() <= 1 {
            self.report.uncovered.push(UncoveredLeaf::new(envelopes));
            return Vec::new();
        }
        let e = envelopes.swap_remove(pick);
        let (left, right) = bisect_envelope(&e, self.ctx.grid()).expect("at least two positions");
        self.report.bisections += 1;
        self.report.max_bisection_depth = self.report.max_bisection_depth.max(depth);
        self.tree_depth = self.tree_depth.max(depth);
        let mut found = Vec::new();
        for half in [left, right] {
            let mut set = envelopes.clone();
            set.push(half);
            match self.plan(&set) {
                Ok(path) => found.push(self.record(path, set)),
                Err(_) => {
                    self.report.planner_failures += 1;
                    found.extend(self.bisect_at_depth(set, depth + 1));
                }
            }
        }
        found
    }

    /// Runs the full per-goal procedure and returns every record created, in
    /// creation order.
    pub fn run(&mut self) -> Result<Vec<PathRecord>, PreprocessError> {
        let first = self.plan(&[]).map_err(|reason| PreprocessError::FirstPathFailed {
            goal: self.goal,
            reason,
        })?;
        let first = self.record(first, Vec::new());
        let mut all = vec![first.clone()];
        let mut layer = vec![first];
        for _ in 0..self.ctx.scenario().obstacles.count {
            let mut next = Vec::new();
            for rec in &layer {
                if rec.envelope.is_empty() {
                    continue;
                }
                let mut avoided = rec.avoided.clone();
                avoided.push(rec.envelope.clone());
                match self.plan(&avoided) {
                    Ok(path) => next.push(self.record(path, avoided)),
                    Err(_) => {
                        self.report.planner_failures += 1;
                        next.extend(self.bisect_and_find_more(avoided));
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            all.extend(next.iter().cloned());
            layer = next;
        }
        Ok(all)
    }
}

/// Stored entries: one per distinct path, cheapest first, creation order
/// among equal costs.
pub fn goal_entries(records: Vec<PathRecord>) -> Vec<DatabaseEntry> {
    let mut entries: Vec<DatabaseEntry> = Vec::with_capacity(records.len());
    for rec in records {
        if entries.iter().any(|e| e.path.waypoints() == rec.path.waypoints()) {
            continue;
        }
        entries.push(DatabaseEntry {
            envelope: rec.envelope,
            path: rec.path,
        });
    }
    entries.sort_by(|a, b| a.path.cost().total_cmp(&b.path.cost()));
    entries
}

pub fn preprocess_goal(
    ctx: &ScenarioContext,
    g: &Configuration,
) -> Result<(GoalDatabase, GoalReport), PreprocessError> {
    let started = Instant::now();
    let mut run = GoalRun::new(ctx, *g);
    let records = run.run()?;
    let entries = goal_entries(records);
    let mut report = run.report;
    report.paths_found = entries.len();
    report.elapsed = started.elapsed();
    let db = GoalDatabase {
        goal: *g,
        entries,
        uncovered: report.uncovered.clone(),
        near_goal: ctx.near_goal(g),
    };
    Ok((db, report))
}

/// Preprocesses every goal, `jobs` goals at a time. Goals whose first path
/// cannot be found are reported and left out of the database.
pub fn preprocess_all(ctx: &ScenarioContext, jobs: usize) -> (PlannerDatabase, PreprocessReport) {
    let started = Instant::now();
    let goals = &ctx.scenario().goals;
    let work = || -> Vec<_> { goals.par_iter().map(|g| (*g, preprocess_goal(ctx, g))).collect() };
    let results = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    let mut dbs = Vec::new();
    let mut outcomes = Vec::new();
    let mut expansions = 0;
    for (goal, result) in results {
        match result {
            Ok((db, report)) => {
                expansions += report.expansions;
                dbs.push(db);
                outcomes.push(GoalOutcome {
                    goal,
                    result: Ok(report),
                });
            }
            Err(e) => {
                let PreprocessError::FirstPathFailed { reason, .. } = &e;
                expansions += reason.expansions();
                outcomes.push(GoalOutcome { goal, result: Err(e) });
            }
        }
    }
    let s = ctx.scenario();
    let db = PlannerDatabase::new(
        scenario_digest(s),
        s.obstacles.count,
        s.obstacles.region.clone(),
        ctx.start_blockers().clone(),
        dbs,
    );
    let report = PreprocessReport {
        goals: outcomes,
        expansions,
        elapsed: started.elapsed(),
    };
    (db, report)
}
