//! Problem setup: static map, robot, start, goal list, movable obstacles.

use thiserror::Error;

use crate::planner::{SearchBudget, SearchSpace};
use crate::robot::{self, Configuration, RobotModel};
use crate::worldgrid::{disk_cells, inflate, CellSet, GridMap};

/// A scenario invariant violation, tagged with the offending field.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{field}: {message}")]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Identical movable obstacles sharing one placement region.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacles {
    pub count: usize,
    pub radius: f64,
    pub region: CellSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridMap,
    pub model: RobotModel,
    pub start: Configuration,
    pub goals: Vec<Configuration>,
    pub obstacles: Obstacles,
    /// Obstacles within this distance of a goal's projection are ignored.
    pub epsilon: f64,
    pub budget: SearchBudget,
}

/// A region position that, while admissible by the goal-distance rule,
/// would still cover the goal configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonWarning {
    pub goal_index: usize,
    pub goal: Configuration,
    pub position: u32,
}

impl Scenario {
    /// Checks every fatal invariant.
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.model
            .validate()
            .map_err(|e| ValidationError::new("robot", e.to_string()))?;
        let statics = self.grid.occupied_cells();
        let clear = |field: &str, c: &Configuration| -> Result<(), ValidationError> {
            let f =
                robot::footprint(&self.model, c, &self.grid).map_err(|e| ValidationError::new(field, e.to_string()))?;
            if f.intersects(&statics) {
                return Err(ValidationError::new(
                    field,
                    format!("configuration {c} overlaps static occupancy"),
                ));
            }
            Ok(())
        };
        clear("start", &self.start)?;
        if self.goals.is_empty() {
            return Err(ValidationError::new("goals", "at least one goal is required"));
        }
        for (i, g) in self.goals.iter().enumerate() {
            clear(&format!("goals[{i}]"), g)?;
            if self.goals[..i].contains(g) {
                return Err(ValidationError::new(
                    format!("goals[{i}]"),
                    format!("duplicate goal {g}"),
                ));
            }
        }
        let o = &self.obstacles;
        if o.count == 0 {
            return Err(ValidationError::new("obstacles.count", "must be at least 1"));
        }
        if !(o.radius > 0.0 && o.radius.is_finite()) {
            return Err(ValidationError::new(
                "obstacles.radius",
                format!("must be positive, got {}", o.radius),
            ));
        }
        if o.region.universe() != self.grid.cell_count() {
            return Err(ValidationError::new(
                "obstacles.region",
                "region does not match the grid",
            ));
        }
        if o.region.is_empty() {
            return Err(ValidationError::new("obstacles.region", "region is empty"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ValidationError::new(
                "epsilon",
                format!("must be >= 0, got {}", self.epsilon),
            ));
        }
        SearchBudget::new(self.budget.max_expansions, self.budget.heuristic_weight)
            .map_err(|e| ValidationError::new("budget", e))?;
        Ok(())
    }

    /// Region positions farther than epsilon from a goal whose disc still
    /// overlaps that goal's footprint. Queries cannot cover such placements.
    pub fn epsilon_warnings(&self) -> Vec<EpsilonWarning> {
        let mut out = Vec::new();
        for (goal_index, g) in self.goals.iter().enumerate() {
            let Ok(fp) = robot::footprint(&self.model, g, &self.grid) else {
                continue;
            };
            let proj = self.model.project(g, &self.grid);
            for q in self.obstacles.region.iter() {
                if self.grid.cell_center(q).distance(proj) > self.epsilon
                    && disk_cells(q, self.obstacles.radius, &self.grid).intersects(&fp)
                {
                    out.push(EpsilonWarning {
                        goal_index,
                        goal: *g,
                        position: q,
                    });
                }
            }
        }
        out
    }
}

/// A validated scenario together with the lattice and the goal-independent
/// cell sets every preprocessing and query step needs.
#[derive(Debug, Clone)]
pub struct ScenarioContext {
    scenario: Scenario,
    space: SearchSpace,
    static_cells: CellSet,
    start_blockers: CellSet,
}

impl ScenarioContext {
    pub fn new(scenario: Scenario) -> Result<Self, ValidationError> {
        scenario.validate()?;
        let space = SearchSpace::new(scenario.model.clone(), scenario.grid.clone())
            .map_err(|e| ValidationError::new("robot", e.to_string()))?;
        let static_cells = scenario.grid.occupied_cells();
        let start_blockers = start_blockers(&scenario);
        Ok(ScenarioContext {
            scenario,
            space,
            static_cells,
            start_blockers,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn grid(&self) -> &GridMap {
        &self.scenario.grid
    }

    pub fn static_cells(&self) -> &CellSet {
        &self.static_cells
    }

    /// Region positions whose disc overlaps the start footprint.
    pub fn start_blockers(&self) -> &CellSet {
        &self.start_blockers
    }

    pub fn near_goal(&self, g: &Configuration) -> CellSet {
        near_goal(&self.scenario, g)
    }

    /// Region positions an obstacle may occupy when the goal is `g`.
    pub fn admissible_positions(&self, g: &Configuration) -> CellSet {
        let mut q = self.scenario.obstacles.region.clone();
        q.subtract(&self.start_blockers);
        q.subtract(&self.near_goal(g));
        q
    }
}

/// Region positions whose disc overlaps the start footprint.
pub fn start_blockers(scenario: &Scenario) -> CellSet {
    let fp = robot::footprint(&scenario.model, &scenario.start, &scenario.grid)
        .expect("validated start is inside the lattice");
    let mut blockers = inflate(&fp, scenario.obstacles.radius, &scenario.grid);
    blockers.intersect_with(&scenario.obstacles.region);
    blockers
}

/// Cells whose centers lie within epsilon of the goal projection.
pub fn near_goal(scenario: &Scenario, g: &Configuration) -> CellSet {
    let proj = scenario.model.project(g, &scenario.grid);
    scenario.grid.cells_near_point(proj, scenario.epsilon)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Room split by a wall at x = 7 with gaps at rows 3-4 and 10-11; obstacles live in
    /// the band around the wall.
    pub fn two_gap_room() -> Scenario {
        let rows = [
            ".......#.......",
            ".......#.......",
            ".......#.......",
            "...............",
            "...............",
            ".......#.......",
            ".......#.......",
            ".......#.......",
            ".......#.......",
            ".......#.......",
            "...............",
            "...............",
            ".......#.......",
            ".......#.......",
            ".......#.......",
        ];
        from_rows(
            &rows,
            1.0,
            RobotModel::disk(0.5),
            (1, 7),
            &[(13, 7)],
            1,
            1.0,
            2.0,
            (5, 1, 9, 13),
        )
    }

    /// Two 1-wide corridors (rows 0 and 2) joined at both ends.
    pub fn twin_corridors(region: (usize, usize, usize, usize)) -> Scenario {
        let rows = ["...........", "...#####...", "..........."];
        from_rows(
            &rows,
            1.0,
            RobotModel::disk(0.4),
            (0, 1),
            &[(10, 1)],
            1,
            0.5,
            0.5,
            region,
        )
    }

    /// One 1-wide corridor at row 2 of a 5-row room; obstacles may sit in the
    /// corridor and in the open area before it.
    pub fn narrow_corridor() -> Scenario {
        let rows = [
            "...########",
            "...########",
            "...........",
            "...########",
            "...########",
        ];
        let mut s = from_rows(
            &rows,
            1.0,
            RobotModel::disk(0.4),
            (0, 2),
            &[(10, 2)],
            1,
            0.5,
            0.5,
            (1, 1, 2, 3),
        );
        for x in 4..=6 {
            s.obstacles.region.insert(s.grid.index(x, 2).unwrap());
        }
        s
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_rows(
        rows: &[&str],
        resolution: f64,
        model: RobotModel,
        start: (u32, u32),
        goals: &[(u32, u32)],
        count: usize,
        radius: f64,
        epsilon: f64,
        rect: (usize, usize, usize, usize),
    ) -> Scenario {
        let (w, h) = (rows[0].len(), rows.len());
        let occupied = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        let grid = GridMap::with_occupancy(w, h, resolution, occupied).unwrap();
        let mut region = grid.empty_set();
        for y in rect.1..=rect.3 {
            for x in rect.0..=rect.2 {
                let c = grid.index(x, y).unwrap();
                if !grid.is_occupied(c) {
                    region.insert(c);
                }
            }
        }
        let s = Scenario {
            grid,
            model,
            start: Configuration::cell(start.0, start.1),
            goals: goals.iter().map(|&(x, y)| Configuration::cell(x, y)).collect(),
            obstacles: Obstacles { count, radius, region },
            epsilon,
            budget: SearchBudget::default(),
        };
        s.validate().unwrap();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_valid() {
        let s = fixtures::two_gap_room();
        assert!(s.validate().is_ok());
        assert!(s.epsilon_warnings().is_empty());
    }

    #[test]
    fn start_in_wall_names_start() {
        let mut s = fixtures::two_gap_room();
        s.start = Configuration::cell(7, 1);
        assert_eq!(s.validate().unwrap_err().field, "start");
        let mut s = fixtures::two_gap_room();
        s.goals.push(Configuration::cell(7, 2));
        assert_eq!(s.validate().unwrap_err().field, "goals[1]");
    }

    #[test]
    fn obstacle_fields_are_checked() {
        let mut s = fixtures::two_gap_room();
        s.obstacles.count = 0;
        assert_eq!(s.validate().unwrap_err().field, "obstacles.count");
        let mut s = fixtures::two_gap_room();
        s.obstacles.region = s.grid.empty_set();
        assert_eq!(s.validate().unwrap_err().field, "obstacles.region");
        let mut s = fixtures::two_gap_room();
        s.epsilon = -1.0;
        assert_eq!(s.validate().unwrap_err().field, "epsilon");
    }

    #[test]
    fn epsilon_warnings_flag_goal_blockers() {
        let mut s = fixtures::two_gap_room();
        s.goals = vec![Configuration::cell(8, 7)];
        s.epsilon = 0.5;
        let warnings = s.epsilon_warnings();
        // (9,7) is 1.0 from the goal center and its disc reaches the goal cell
        assert!(warnings.iter().any(|w| w.position == s.grid.index(9, 7).unwrap()));
        assert!(warnings.iter().all(|w| w.goal_index == 0));
        s.epsilon = 1.5;
        assert!(s.epsilon_warnings().is_empty());
    }
}
