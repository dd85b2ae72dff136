//! Scenario files (TOML) and database files (versioned JSON).
//!
//! Scenario layout:
//!
//! ```toml
//! resolution = 1.0
//! map = ["......", "..##..", "......"]   # row r is y = r; '#' is occupied
//! start = [0, 1]
//! goals = [[5, 1]]
//! epsilon = 1.5
//!
//! [robot]
//! kind = "disk"          # or "arm" with base, links, halfwidth, joint_steps
//! radius = 0.4
//!
//! [obstacles]
//! count = 1
//! radius = 1.0
//! region = { rect = [1, 0, 4, 2] }     # inclusive cell bounds, or cells = [[x, y], ...]
//!
//! [budget]                             # optional
//! max_expansions = 200000
//! heuristic_weight = 1.0
//! ```
//!
//! A rectangular region drops statically occupied cells; an explicit cell
//! list is taken as given.

use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::database::{DatabaseEntry, GoalDatabase, PlannerDatabase, UncoveredLeaf};
use crate::envelope::Envelope;
use crate::planner::{SearchBudget, DEFAULT_MAX_EXPANSIONS};
use crate::preprocess::PreprocessReport;
use crate::robot::{Configuration, DiskRobot, Path, PlanarArm, RobotModel};
use crate::scenario::{near_goal, start_blockers, Obstacles, Scenario, ValidationError};
use crate::worldgrid::{CellSet, GridMap, Point2};

pub const DATABASE_FORMAT: &str = "altpaths-database";
pub const DATABASE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Parse { field: String, message: String },
    #[error("invalid scenario: {0}")]
    Validation(#[from] ValidationError),
}

impl ScenarioError {
    fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit status: 2 for invariant violations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Validation(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RobotDoc {
    Disk {
        radius: f64,
    },
    Arm {
        base: [f64; 2],
        links: Vec<f64>,
        halfwidth: f64,
        joint_steps: u32,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rect: Option<[usize; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ObstaclesDoc {
    pub count: usize,
    pub radius: f64,
    pub region: RegionDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BudgetDoc {
    #[serde(default = "default_expansions")]
    pub max_expansions: u64,
    #[serde(default = "default_weight")]
    pub heuristic_weight: f64,
}

fn default_expansions() -> u64 {
    DEFAULT_MAX_EXPANSIONS
}

fn default_weight() -> f64 {
    1.0
}

impl Default for BudgetDoc {
    fn default() -> Self {
        BudgetDoc {
            max_expansions: default_expansions(),
            heuristic_weight: default_weight(),
        }
    }
}

/// On-disk scenario description, shared by scenario files and the copy
/// embedded in every database.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub resolution: f64,
    pub map: Vec<String>,
    pub robot: RobotDoc,
    pub start: Configuration,
    pub goals: Vec<Configuration>,
    pub obstacles: ObstaclesDoc,
    pub epsilon: f64,
    #[serde(default)]
    pub budget: BudgetDoc,
}

impl ScenarioDoc {
    /// Canonical form: explicit sorted region cells.
    pub fn from_scenario(s: &Scenario) -> Self {
        let grid = &s.grid;
        let map = (0..grid.height())
            .map(|y| {
                (0..grid.width())
                    .map(|x| {
                        if grid.is_occupied(grid.index(x, y).unwrap()) {
                            '#'
                        } else {
                            '.'
                        }
                    })
                    .collect()
            })
            .collect();
        let robot = match &s.model {
            RobotModel::Disk(d) => RobotDoc::Disk { radius: d.radius },
            RobotModel::Arm(a) => RobotDoc::Arm {
                base: [a.base.x, a.base.y],
                links: a.links.clone(),
                halfwidth: a.halfwidth,
                joint_steps: a.joint_steps,
            },
        };
        let cells = s
            .obstacles
            .region
            .iter()
            .map(|c| {
                let (x, y) = grid.coords(c);
                [x, y]
            })
            .collect();
        ScenarioDoc {
            resolution: grid.resolution(),
            map,
            robot,
            start: s.start,
            goals: s.goals.clone(),
            obstacles: ObstaclesDoc {
                count: s.obstacles.count,
                radius: s.obstacles.radius,
                region: RegionDoc {
                    rect: None,
                    cells: Some(cells),
                },
            },
            epsilon: s.epsilon,
            budget: BudgetDoc {
                max_expansions: s.budget.max_expansions,
                heuristic_weight: s.budget.heuristic_weight,
            },
        }
    }

    /// Builds and validates the scenario.
    pub fn to_scenario(&self) -> Result<Scenario, ScenarioError> {
        let height = self.map.len();
        if height == 0 {
            return Err(ScenarioError::parse("map", "map has no rows"));
        }
        let width = self.map[0].chars().count();
        let mut occupied = Vec::with_capacity(width * height);
        for (r, row) in self.map.iter().enumerate() {
            let n = row.chars().count();
            if n != width {
                return Err(ScenarioError::parse(
                    "map",
                    format!("row {r} has width {n}, expected {width}"),
                ));
            }
            for (x, ch) in row.chars().enumerate() {
                occupied.push(match ch {
                    '.' => false,
                    '#' => true,
                    other => {
                        return Err(ScenarioError::parse(
                            "map",
                            format!("row {r}, column {x}: unexpected character {other:?}"),
                        ))
                    }
                });
            }
        }
        let grid = GridMap::with_occupancy(width, height, self.resolution, occupied)
            .map_err(|e| ScenarioError::parse("map", e.to_string()))?;

        let model = match &self.robot {
            RobotDoc::Disk { radius } => RobotModel::Disk(DiskRobot { radius: *radius }),
            RobotDoc::Arm {
                base,
                links,
                halfwidth,
                joint_steps,
            } => RobotModel::Arm(PlanarArm {
                base: Point2::new(base[0], base[1]),
                links: links.clone(),
                halfwidth: *halfwidth,
                joint_steps: *joint_steps,
            }),
        };

        let cell = |field: &str, x: usize, y: usize| {
            grid.index(x, y).ok_or_else(|| {
                ScenarioError::parse(field, format!("cell ({x},{y}) is outside the {width}x{height} map"))
            })
        };
        let mut region = grid.empty_set();
        match (&self.obstacles.region.rect, &self.obstacles.region.cells) {
            (Some([x0, y0, x1, y1]), None) => {
                if x0 > x1 || y0 > y1 {
                    return Err(ScenarioError::parse(
                        "obstacles.region",
                        "rect bounds must be [x0, y0, x1, y1] with x0 <= x1, y0 <= y1",
                    ));
                }
                cell("obstacles.region", *x1, *y1)?;
                for y in *y0..=*y1 {
                    for x in *x0..=*x1 {
                        let c = cell("obstacles.region", x, y)?;
                        if !grid.is_occupied(c) {
                            region.insert(c);
                        }
                    }
                }
            }
            (None, Some(cells)) => {
                for [x, y] in cells {
                    region.insert(cell("obstacles.region", *x, *y)?);
                }
            }
            _ => {
                return Err(ScenarioError::parse(
                    "obstacles.region",
                    "give exactly one of `rect` or `cells`",
                ))
            }
        }

        let scenario = Scenario {
            grid,
            model,
            start: self.start,
            goals: self.goals.clone(),
            obstacles: Obstacles {
                count: self.obstacles.count,
                radius: self.obstacles.radius,
                region,
            },
            epsilon: self.epsilon,
            budget: SearchBudget {
                max_expansions: self.budget.max_expansions,
                heuristic_weight: self.budget.heuristic_weight,
            },
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    doc.to_scenario()
}

pub fn parse_scenario(path: impl AsRef<FsPath>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

/// Hex SHA-256 of the canonical JSON form of the scenario.
pub fn scenario_digest(s: &Scenario) -> String {
    let bytes = serde_json::to_vec(&ScenarioDoc::from_scenario(s)).expect("scenario documents serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub cost: f64,
    pub waypoints: Vec<Configuration>,
    pub envelope: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GoalDoc {
    pub goal: Configuration,
    pub entries: Vec<EntryDoc>,
    /// Each leaf is a list of envelopes, each a sorted cell list.
    pub uncovered: Vec<Vec<Vec<u32>>>,
}

/// Deterministic part of the preprocessing report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GoalSummary {
    pub goal: Configuration,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub paths_found: usize,
    pub bisections: usize,
    pub planner_failures: usize,
    pub max_bisection_depth: usize,
    pub expansions: u64,
    pub uncovered_leaves: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatabaseFile {
    pub format: String,
    pub version: u32,
    pub digest: String,
    pub scenario: ScenarioDoc,
    pub goals: Vec<GoalDoc>,
    pub report: Vec<GoalSummary>,
}

#[derive(Debug, Error)]
pub enum DatabaseError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed database: {0}")]
    Malformed(String),
    #[error("unsupported database format {format:?} version {version}")]
    Unsupported { format: String, version: u32 },
    #[error("embedded scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("scenario digest mismatch: database records {recorded}, scenario hashes to {actual}")]
    DigestMismatch { recorded: String, actual: String },
}

/// A database together with the scenario it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDatabase {
    pub scenario: Scenario,
    pub database: PlannerDatabase,
    pub summary: Vec<GoalSummary>,
}

pub fn summarize(report: &PreprocessReport) -> Vec<GoalSummary> {
    report
        .goals
        .iter()
        .map(|o| match &o.result {
            Ok(r) => GoalSummary {
                goal: o.goal,
                ok: true,
                error: None,
                paths_found: r.paths_found,
                bisections: r.bisections,
                planner_failures: r.planner_failures,
                max_bisection_depth: r.max_bisection_depth,
                expansions: r.expansions,
                uncovered_leaves: r.uncovered.len(),
            },
            Err(e) => GoalSummary {
                goal: o.goal,
                ok: false,
                error: Some(e.to_string()),
                paths_found: 0,
                bisections: 0,
                planner_failures: 0,
                max_bisection_depth: 0,
                expansions: match e {
                    crate::preprocess::PreprocessError::FirstPathFailed { reason, .. } => reason.expansions(),
                },
                uncovered_leaves: 0,
            },
        })
        .collect()
}

impl DatabaseFile {
    pub fn new(scenario: &Scenario, db: &PlannerDatabase, summary: Vec<GoalSummary>) -> Self {
        let goals = db
            .goals()
            .iter()
            .map(|g| GoalDoc {
                goal: g.goal,
                entries: g
                    .entries
                    .iter()
                    .map(|e| EntryDoc {
                        cost: e.path.cost(),
                        waypoints: e.path.waypoints().to_vec(),
                        envelope: e.envelope.sorted(),
                    })
                    .collect(),
                uncovered: g
                    .uncovered
                    .iter()
                    .map(|leaf| leaf.envelopes.iter().map(|e| e.sorted()).collect())
                    .collect(),
            })
            .collect();
        DatabaseFile {
            format: DATABASE_FORMAT.to_string(),
            version: DATABASE_VERSION,
            digest: db.digest().to_string(),
            scenario: ScenarioDoc::from_scenario(scenario),
            goals,
            report: summary,
        }
    }

    /// Compact JSON with a trailing newline; byte-identical for equal inputs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec(self).expect("database documents serialize");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DatabaseError> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| DatabaseError::Malformed(e.to_string()))?;
        let format = value
            .get("format")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if format != DATABASE_FORMAT || version != DATABASE_VERSION {
            return Err(DatabaseError::Unsupported { format, version });
        }
        serde_json::from_value(value).map_err(|e| DatabaseError::Malformed(e.to_string()))
    }

    /// Rebuilds the scenario and database, re-deriving admissibility sets
    /// and checking the digest, path adjacency and stored costs.
    pub fn load(&self) -> Result<LoadedDatabase, DatabaseError> {
        let scenario = self.scenario.to_scenario()?;
        let actual = scenario_digest(&scenario);
        if actual != self.digest {
            return Err(DatabaseError::DigestMismatch {
                recorded: self.digest.clone(),
                actual,
            });
        }
        let malformed = |m: String| DatabaseError::Malformed(m);
        let cells = scenario.grid.cell_count();
        let mut goals = Vec::with_capacity(self.goals.len());
        for gd in &self.goals {
            if !scenario.goals.contains(&gd.goal) {
                return Err(malformed(format!("goal {} is not a scenario goal", gd.goal)));
            }
            let mut entries = Vec::with_capacity(gd.entries.len());
            for (k, e) in gd.entries.iter().enumerate() {
                let path = Path::new(e.waypoints.clone(), &scenario.model, &scenario.grid)
                    .map_err(|err| malformed(format!("goal {} entry {k}: {err}", gd.goal)))?;
                if path.cost() != e.cost {
                    return Err(malformed(format!(
                        "goal {} entry {k}: stored cost {} but waypoints cost {}",
                        gd.goal,
                        e.cost,
                        path.cost()
                    )));
                }
                if let Some(&bad) = e.envelope.iter().find(|&&c| c as usize >= cells) {
                    return Err(malformed(format!(
                        "goal {} entry {k}: cell {bad} outside the grid",
                        gd.goal
                    )));
                }
                entries.push(DatabaseEntry {
                    envelope: Envelope::from_cells(e.envelope.iter().copied()),
                    path,
                });
            }
            let uncovered = gd
                .uncovered
                .iter()
                .map(|leaf| UncoveredLeaf::new(leaf.iter().map(|e| Envelope::from_cells(e.iter().copied())).collect()))
                .collect();
            goals.push(GoalDatabase {
                goal: gd.goal,
                entries,
                uncovered,
                near_goal: near_goal(&scenario, &gd.goal),
            });
        }
        let database = PlannerDatabase::new(
            self.digest.clone(),
            scenario.obstacles.count,
            scenario.obstacles.region.clone(),
            start_blockers(&scenario),
            goals,
        );
        Ok(LoadedDatabase {
            scenario,
            database,
            summary: self.report.clone(),
        })
    }
}

pub fn write_database(
    path: impl AsRef<FsPath>,
    scenario: &Scenario,
    db: &PlannerDatabase,
    report: &PreprocessReport,
) -> Result<u64, DatabaseError> {
    let path = path.as_ref();
    let bytes = DatabaseFile::new(scenario, db, summarize(report)).to_bytes();
    fs::write(path, &bytes).map_err(|source| DatabaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(bytes.len() as u64)
}

pub fn read_database(path: impl AsRef<FsPath>) -> Result<LoadedDatabase, DatabaseError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| DatabaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    DatabaseFile::from_bytes(&bytes)?.load()
}

/// Cells of `set` as `[x, y]` pairs, ascending by index.
pub fn cell_pairs(set: &CellSet, grid: &GridMap) -> Vec<[usize; 2]> {
    set.iter()
        .map(|c| {
            let (x, y) = grid.coords(c);
            [x, y]
        })
        .collect()
}
