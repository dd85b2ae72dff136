use std::fs;
use std::path::Path as FsPath;
use std::time::Instant;

use altpaths::database::{PlannerDatabase, QueryError};
use altpaths::io::{self, DatabaseError, LoadedDatabase, ScenarioError};
use altpaths::oracle::{self, CoverageFailure, OracleError, PlacementMode};
use altpaths::preprocess::preprocess_all;
use altpaths::robot::{thread_collision_checks, Configuration};
use altpaths::scenario::{Scenario, ScenarioContext};
use altpaths::worldgrid::GridMap;

use crate::render::render_svg;
use crate::stats::{strawman_entries, summarize};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_VERIFICATION: u8 = 3;
pub const EXIT_QUERY: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::new(e.exit_code() as u8, e.to_string())
    }
}

impl From<DatabaseError> for CliError {
    fn from(e: DatabaseError) -> Self {
        let code = match &e {
            DatabaseError::Scenario(inner) => inner.exit_code() as u8,
            DatabaseError::DigestMismatch { .. } => EXIT_VERIFICATION,
            _ => EXIT_USAGE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::CapExceeded { .. } => EXIT_USAGE,
            _ => EXIT_VERIFICATION,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        CliError::new(EXIT_QUERY, e.to_string())
    }
}

type CliResult = Result<(), CliError>;

/// Parses `"x,y;x,y;..."` into cell pairs.
pub fn parse_obstacle_pairs(text: &str) -> Result<Vec<(usize, usize)>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .enumerate()
        .map(|(i, item)| {
            let bad = || format!("obstacle {}: expected \"x,y\", got {:?}", i + 1, item.trim());
            let (x, y) = item.split_once(',').ok_or_else(bad)?;
            let x = x.trim().parse().map_err(|_| bad())?;
            let y = y.trim().parse().map_err(|_| bad())?;
            Ok((x, y))
        })
        .collect()
}

fn parse_placement(text: &str, grid: &GridMap) -> Result<Vec<u32>, CliError> {
    let pairs = parse_obstacle_pairs(text).map_err(|m| CliError::new(EXIT_USAGE, m))?;
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            grid.index(x, y).ok_or_else(|| {
                CliError::new(
                    EXIT_QUERY,
                    format!("invalid placement: obstacle {} at ({x},{y}) is outside the map", i + 1),
                )
            })
        })
        .collect()
}

fn format_placement(p: &[u32], grid: &GridMap) -> String {
    p.iter()
        .map(|&c| {
            let (x, y) = grid.coords(c);
            format!("{x},{y}")
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn goal_at(s: &Scenario, index: usize) -> Result<Configuration, CliError> {
    s.goals.get(index).copied().ok_or_else(|| {
        CliError::new(
            EXIT_USAGE,
            format!("goal index {index} out of range (scenario has {} goals)", s.goals.len()),
        )
    })
}

fn load(path: &FsPath) -> Result<(LoadedDatabase, u64), CliError> {
    let loaded = io::read_database(path)?;
    let size = fs::metadata(path).map(|m| m.len()).unwrap_or(0);
    Ok((loaded, size))
}

pub fn preprocess(scenario_path: &FsPath, out: &FsPath, jobs: usize) -> CliResult {
    let scenario = io::parse_scenario(scenario_path)?;
    let warnings = scenario.epsilon_warnings();
    for w in warnings.iter().take(10) {
        let (x, y) = scenario.grid.coords(w.position);
        eprintln!(
            "warning: goal {} {}: obstacle at ({x},{y}) is beyond epsilon but overlaps the goal footprint",
            w.goal_index, w.goal
        );
    }
    if warnings.len() > 10 {
        eprintln!("warning: {} more epsilon warnings", warnings.len() - 10);
    }
    let ctx = ScenarioContext::new(scenario).map_err(ScenarioError::from)?;
    let started = Instant::now();
    let (db, report) = preprocess_all(&ctx, jobs);
    let elapsed = started.elapsed();
    let size = io::write_database(out, ctx.scenario(), &db, &report)?;

    for (i, outcome) in report.goals.iter().enumerate() {
        match &outcome.result {
            Ok(r) => println!(
                "goal {i} {}: {} paths, {} bisections, {} planner failures, {} uncovered leaves, {:.3} ms",
                outcome.goal,
                r.paths_found,
                r.bisections,
                r.planner_failures,
                r.uncovered.len(),
                r.elapsed.as_secs_f64() * 1e3
            ),
            Err(e) => println!("goal {i} {}: FAILED: {e}", outcome.goal),
        }
    }
    let failed = report.failures().count();
    println!(
        "total: {} goals, {failed} failed, {} expansions, {:.3} ms",
        report.goals.len(),
        report.expansions,
        elapsed.as_secs_f64() * 1e3
    );
    println!("database: {} ({size} bytes)", out.display());
    if failed == report.goals.len() {
        return Err(CliError::new(
            EXIT_VALIDATION,
            "no goal could be reached from the start",
        ));
    }
    Ok(())
}

pub fn query(db_path: &FsPath, goal_index: usize, obstacles: &str, repeat: Option<usize>) -> CliResult {
    let (loaded, _) = load(db_path)?;
    let s = &loaded.scenario;
    let db = &loaded.database;
    let g = goal_at(s, goal_index)?;
    let placement = parse_placement(obstacles, &s.grid)?;
    let checks_before = thread_collision_checks();
    let hit = db.query(&g, &placement)?;
    println!(
        "goal {goal_index} {g}: entry {} of {}, cost {:.4}, {} waypoints, {} lookups",
        hit.entry,
        db.goal(&g).map_or(0, |d| d.entries.len()),
        hit.path.cost(),
        hit.path.len(),
        hit.lookups
    );
    let waypoints: Vec<String> = hit.path.waypoints().iter().map(|c| c.to_string()).collect();
    println!("waypoints: {}", waypoints.join(" "));

    if let Some(k) = repeat.filter(|&k| k > 0) {
        let latencies = time_queries(db, &g, std::slice::from_ref(&placement), k);
        let stats = summarize(&latencies);
        println!(
            "latency over {k} queries: mean {:.3} us, std {:.3} us, max {:.3} us",
            stats.mean, stats.std, stats.max
        );
    }
    println!(
        "collision checks during queries: {}",
        thread_collision_checks() - checks_before
    );
    Ok(())
}

/// Per-query latency in microseconds, cycling through `placements`, after
/// an untimed warm-up pass.
fn time_queries(db: &PlannerDatabase, g: &Configuration, placements: &[Vec<u32>], count: usize) -> Vec<f64> {
    let mut sink = 0usize;
    for p in placements.iter().cycle().take(count.min(1000).max(placements.len())) {
        sink += db.query(g, p).map_or(0, |h| h.entry);
    }
    let mut out = Vec::with_capacity(count);
    for p in placements.iter().cycle().take(count) {
        let t = Instant::now();
        let r = db.query(g, p);
        out.push(t.elapsed().as_secs_f64() * 1e6);
        sink += r.map_or(0, |h| h.entry);
    }
    std::hint::black_box(sink);
    out
}

pub fn verify(
    db_path: &FsPath,
    mode: PlacementMode,
    completeness: bool,
    scenario_path: Option<&FsPath>,
    cap: u128,
) -> CliResult {
    let (loaded, _) = load(db_path)?;
    let scenario = match scenario_path {
        Some(p) => io::parse_scenario(p)?,
        None => loaded.scenario,
    };
    oracle::check_digest(&loaded.database, &scenario)?;
    let ctx = ScenarioContext::new(scenario).map_err(ScenarioError::from)?;
    let db = &loaded.database;
    let grid = ctx.grid();
    let mut failed = false;
    for (i, g) in ctx.scenario().goals.iter().enumerate() {
        if db.goal(g).is_none() {
            println!("goal {i} {g}: FAIL not in database (preprocessing found no path)");
            failed = true;
            continue;
        }
        let cov = oracle::verify_coverage(db, &ctx, g, mode, cap)?;
        println!(
            "goal {i} {g}: coverage {} ({} placements, {} failures, {} in uncovered leaves, success {:.1}%)",
            if cov.passed() { "PASS" } else { "FAIL" },
            cov.placements_checked,
            cov.coverage_failures.len(),
            cov.expected_uncovered_hits,
            cov.success_rate()
        );
        for (p, why) in cov.coverage_failures.iter().take(20) {
            let reason = match why {
                CoverageFailure::NoPathReturned => "no path returned".to_string(),
                CoverageFailure::ReturnedPathCollides { entry } => format!("returned path (entry {entry}) collides"),
                CoverageFailure::Rejected(m) => format!("rejected: {m}"),
            };
            println!("  placement {}: {reason}", format_placement(p, grid));
        }
        if cov.coverage_failures.len() > 20 {
            println!("  ... {} more", cov.coverage_failures.len() - 20);
        }
        failed |= !cov.passed();
        if completeness {
            let comp = oracle::verify_completeness(db, &ctx, g, mode, cap)?;
            println!(
                "goal {i} {g}: completeness {} ({} placements, direct {}, query {}, {} violations)",
                if comp.passed() { "PASS" } else { "FAIL" },
                comp.placements_checked,
                comp.direct_successes,
                comp.query_successes,
                comp.violations.len()
            );
            for p in comp.violations.iter().take(20) {
                println!(
                    "  placement {}: direct search succeeds, query does not",
                    format_placement(p, grid)
                );
            }
            failed |= !comp.passed();
        }
    }
    if failed {
        return Err(CliError::new(EXIT_VERIFICATION, "verification failed"));
    }
    Ok(())
}

struct BenchRow {
    n: usize,
    goals: usize,
    paths: (f64, f64),
    success: f64,
    latency: (f64, f64, f64),
    size_kib: f64,
    preprocess_ms: f64,
    strawman: u128,
}

pub fn bench(dbs: &[std::path::PathBuf], samples: usize, seed: u64) -> CliResult {
    let mut rows = Vec::new();
    let mut failures = 0usize;
    for path in dbs {
        let (loaded, size) = load(path)?;
        let ctx = ScenarioContext::new(loaded.scenario).map_err(ScenarioError::from)?;
        let db = &loaded.database;
        let started = Instant::now();
        let _ = preprocess_all(&ctx, 1);
        let preprocess_ms = started.elapsed().as_secs_f64() * 1e3;

        let mode = PlacementMode::Sampled { count: samples, seed };
        let mut latencies = Vec::new();
        let mut answered = 0usize;
        let mut checked = 0usize;
        let mut paths = Vec::new();
        let mut admissible = Vec::new();
        for g in &ctx.scenario().goals {
            admissible.push(oracle::admissible_positions(ctx.scenario(), g).len() as u64);
            let Some(gdb) = db.goal(g) else { continue };
            paths.push(gdb.entries.len() as f64);
            let cov = oracle::verify_coverage(db, &ctx, g, mode, 0)?;
            checked += cov.placements_checked;
            answered += cov.placements_checked - cov.coverage_failures.len() - cov.expected_uncovered_hits;
            failures += cov.coverage_failures.len();
            let placements: Vec<Vec<u32>> = oracle::enumerate_placements(ctx.scenario(), g, mode, 0)?.collect();
            if !placements.is_empty() {
                latencies.extend(time_queries(db, g, &placements, placements.len()));
            }
        }
        let p = summarize(&paths);
        let l = summarize(&latencies);
        rows.push(BenchRow {
            n: ctx.scenario().obstacles.count,
            goals: ctx.scenario().goals.len(),
            paths: (p.mean, p.std),
            success: if checked == 0 {
                100.0
            } else {
                100.0 * answered as f64 / checked as f64
            },
            latency: (l.mean, l.std, l.max),
            size_kib: size as f64 / 1024.0,
            preprocess_ms,
            strawman: strawman_entries(&admissible, ctx.scenario().obstacles.count as u32),
        });
    }
    println!(
        "{:>3} {:>5} {:>16} {:>9} {:>30} {:>10} {:>14} {:>16}",
        "n", "goals", "paths/goal", "success%", "query us mean (std, max)", "db KiB", "preprocess ms", "strawman table"
    );
    for r in &rows {
        println!(
            "{:>3} {:>5} {:>16} {:>9.1} {:>30} {:>10.1} {:>14.3} {:>16}",
            r.n,
            r.goals,
            format!("{:.2} ({:.2})", r.paths.0, r.paths.1),
            r.success,
            format!("{:.3} ({:.3}, {:.3})", r.latency.0, r.latency.1, r.latency.2),
            r.size_kib,
            r.preprocess_ms,
            r.strawman
        );
    }
    println!("strawman table = sum over goals of |admissible positions|^n entries; computed, never built");
    if failures > 0 {
        return Err(CliError::new(
            EXIT_VERIFICATION,
            format!("{failures} coverage failures"),
        ));
    }
    Ok(())
}

pub fn render(db_path: &FsPath, goal_index: usize, obstacles: &str, out: &FsPath) -> CliResult {
    let (loaded, _) = load(db_path)?;
    let s = &loaded.scenario;
    let g = goal_at(s, goal_index)?;
    let placement = parse_placement(obstacles, &s.grid)?;
    let hit = loaded.database.query(&g, &placement)?;
    let gdb = loaded.database.goal(&g).expect("query found the goal");
    let svg = render_svg(s, gdb, hit.entry, &placement);
    fs::write(out, svg).map_err(|e| CliError::new(EXIT_USAGE, format!("{}: {e}", out.display())))?;
    println!(
        "wrote {} ({} stored paths, chosen entry {})",
        out.display(),
        gdb.entries.len(),
        hit.entry
    );
    Ok(())
}
