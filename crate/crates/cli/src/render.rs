//! Standalone SVG of one query: map, obstacle region, placed discs, every
//! stored path for the goal, and the chosen path with its envelope.

use std::fmt::Write;

use altpaths::database::GoalDatabase;
use altpaths::robot::Path;
use altpaths::scenario::Scenario;
use altpaths::worldgrid::Point2;

const CELL_PX: f64 = 16.0;

fn px(v: f64, resolution: f64) -> f64 {
    v / resolution * CELL_PX
}

fn polyline(out: &mut String, s: &Scenario, path: &Path, class: &str, stroke: &str, width: f64) {
    let res = s.grid.resolution();
    let points: Vec<String> = path
        .waypoints()
        .iter()
        .map(|c| {
            let p = s.model.project(c, &s.grid);
            format!("{:.2},{:.2}", px(p.x, res), px(p.y, res))
        })
        .collect();
    writeln!(
        out,
        r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.1}" stroke-linejoin="round"/>"#,
        points.join(" ")
    )
    .unwrap();
}

fn cell_rect(out: &mut String, s: &Scenario, cell: u32, class: &str, fill: &str) {
    let (x, y) = s.grid.coords(cell);
    writeln!(
        out,
        r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{CELL_PX:.2}" height="{CELL_PX:.2}" fill="{fill}"/>"#,
        x as f64 * CELL_PX,
        y as f64 * CELL_PX
    )
    .unwrap();
}

fn marker(out: &mut String, p: Point2, res: f64, class: &str, fill: &str) {
    writeln!(
        out,
        r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{fill}" stroke="black" stroke-width="1.0"/>"#,
        px(p.x, res),
        px(p.y, res),
        CELL_PX * 0.3
    )
    .unwrap();
}

pub fn render_svg(s: &Scenario, gdb: &GoalDatabase, chosen: usize, placement: &[u32]) -> String {
    let grid = &s.grid;
    let res = grid.resolution();
    let (w, h) = (grid.width() as f64 * CELL_PX, grid.height() as f64 * CELL_PX);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#
    )
    .unwrap();
    for c in s.obstacles.region.iter() {
        cell_rect(&mut out, s, c, "region", "#d6e6ff");
    }
    for c in gdb.entries[chosen].envelope.sorted() {
        cell_rect(&mut out, s, c, "envelope", "#ffc680");
    }
    for c in grid.occupied_cells().iter() {
        cell_rect(&mut out, s, c, "static", "#3c3c3c");
    }
    for (i, e) in gdb.entries.iter().enumerate() {
        if i != chosen {
            polyline(&mut out, s, &e.path, "path", "#8a8a8a", 2.0);
        }
    }
    polyline(&mut out, s, &gdb.entries[chosen].path, "path chosen", "#d0312d", 3.0);
    for &q in placement {
        let c = grid.cell_center(q);
        writeln!(
            out,
            r##"<circle class="obstacle" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#1f5fbf" fill-opacity="0.6"/>"##,
            px(c.x, res),
            px(c.y, res),
            px(s.obstacles.radius, res).max(1.0)
        )
        .unwrap();
    }
    marker(&mut out, s.model.project(&s.start, grid), res, "start", "#3fbf5f");
    marker(&mut out, s.model.project(&gdb.goal, grid), res, "goal", "#f2c12e");
    out.push_str("</svg>\n");
    out
}
