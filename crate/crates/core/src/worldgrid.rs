//! Discrete 2D workspace: occupancy grids, cell sets, exact Euclidean
//! distance transforms and radius inflation.
//!
//! All geometry is cell-quantized. A disc of radius `r` around a cell covers
//! exactly the cells whose centers lie within `r` of its center, and every
//! center-to-center distance is computed by [`lattice_distance`], so the
//! distance-field route and the brute-force route produce identical bits.

use std::fmt;

use thiserror::Error;

/// Distance reported for cells when the seed set is empty.
///
/// `f64::INFINITY` compares greater than any grid diagonal, which is all the
/// inflation threshold needs.
pub const NO_SEED_DISTANCE: f64 = f64::INFINITY;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid must be at least 1x1, got {width}x{height}")]
    EmptyGrid { width: usize, height: usize },
    #[error("resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("occupancy has {found} cells, expected {expected}")]
    OccupancySize { expected: usize, found: usize },
}

/// A workspace point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Center-to-center distance in meters for a squared lattice offset.
///
/// Every cell-to-cell distance in the crate goes through this function.
#[inline]
pub fn lattice_distance(squared_cells: u64, resolution: f64) -> f64 {
    (squared_cells as f64).sqrt() * resolution
}

/// Occupancy grid with row-major cell indices `iy * width + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    occupied: Vec<bool>,
}

impl GridMap {
    /// An all-free grid.
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self, GridError> {
        Self::with_occupancy(width, height, resolution, vec![false; width * height])
    }

    pub fn with_occupancy(
        width: usize,
        height: usize,
        resolution: f64,
        occupied: Vec<bool>,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyGrid { width, height });
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GridError::BadResolution(resolution));
        }
        if occupied.len() != width * height {
            return Err(GridError::OccupancySize {
                expected: width * height,
                found: occupied.len(),
            });
        }
        Ok(GridMap {
            width,
            height,
            resolution,
            occupied,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, ix: usize, iy: usize) -> Option<u32> {
        (ix < self.width && iy < self.height).then(|| (iy * self.width + ix) as u32)
    }

    /// Signed variant used by neighbor enumeration and footprint scans.
    pub fn index_signed(&self, ix: i64, iy: i64) -> Option<u32> {
        if ix < 0 || iy < 0 {
            return None;
        }
        self.index(ix as usize, iy as usize)
    }

    pub fn coords(&self, cell: u32) -> (usize, usize) {
        let c = cell as usize;
        (c % self.width, c / self.width)
    }

    pub fn contains_cell(&self, cell: u32) -> bool {
        (cell as usize) < self.cell_count()
    }

    pub fn cell_center(&self, cell: u32) -> Point2 {
        let (ix, iy) = self.coords(cell);
        Point2::new((ix as f64 + 0.5) * self.resolution, (iy as f64 + 0.5) * self.resolution)
    }

    /// Squared center-to-center offset between two cells, in cell units.
    pub fn squared_cell_offset(&self, a: u32, b: u32) -> u64 {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let dx = ax.abs_diff(bx) as u64;
        let dy = ay.abs_diff(by) as u64;
        dx * dx + dy * dy
    }

    pub fn cell_distance(&self, a: u32, b: u32) -> f64 {
        lattice_distance(self.squared_cell_offset(a, b), self.resolution)
    }

    pub fn is_occupied(&self, cell: u32) -> bool {
        self.occupied[cell as usize]
    }

    pub fn set_occupied(&mut self, cell: u32, occupied: bool) {
        self.occupied[cell as usize] = occupied;
    }

    /// The static occupancy as a cell set.
    pub fn occupied_cells(&self) -> CellSet {
        let mut set = self.empty_set();
        for (i, &o) in self.occupied.iter().enumerate() {
            if o {
                set.insert(i as u32);
            }
        }
        set
    }

    pub fn empty_set(&self) -> CellSet {
        CellSet::new(self.cell_count())
    }

    /// Cells whose centers lie within `radius` of an arbitrary workspace point.
    pub fn cells_near_point(&self, p: Point2, radius: f64) -> CellSet {
        let mut set = self.empty_set();
        self.for_each_cell_in_box(p, p, radius, |cell, center| {
            if center.distance(p) <= radius {
                set.insert(cell);
            }
        });
        set
    }

    /// Visits every cell whose center could lie within `margin` of the
    /// axis-aligned box spanned by `a` and `b`.
    pub(crate) fn for_each_cell_in_box(&self, a: Point2, b: Point2, margin: f64, mut visit: impl FnMut(u32, Point2)) {
        let res = self.resolution;
        let lo_x = ((a.x.min(b.x) - margin) / res - 0.5).floor().max(0.0);
        let hi_x = ((a.x.max(b.x) + margin) / res - 0.5).ceil();
        let lo_y = ((a.y.min(b.y) - margin) / res - 0.5).floor().max(0.0);
        let hi_y = ((a.y.max(b.y) + margin) / res - 0.5).ceil();
        if hi_x < 0.0 || hi_y < 0.0 {
            return;
        }
        let hi_x = (hi_x as usize).min(self.width - 1);
        let hi_y = (hi_y as usize).min(self.height - 1);
        for iy in lo_y as usize..=hi_y {
            for ix in lo_x as usize..=hi_x {
                let cell = (iy * self.width + ix) as u32;
                visit(cell, self.cell_center(cell));
            }
        }
    }
}

/// A set of cell indices of one grid, stored as a dense bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    universe: usize,
    words: Vec<u64>,
}

impl CellSet {
    pub fn new(universe: usize) -> Self {
        CellSet {
            universe,
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn from_cells(universe: usize, cells: impl IntoIterator<Item = u32>) -> Self {
        let mut set = CellSet::new(universe);
        for c in cells {
            set.insert(c);
        }
        set
    }

    /// Number of cells in the owning grid.
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, cell: u32) -> bool {
        let c = cell as usize;
        assert!(c < self.universe, "cell {c} outside grid of {} cells", self.universe);
        let (w, b) = (c / 64, c % 64);
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, cell: u32) -> bool {
        let c = cell as usize;
        if c >= self.universe {
            return false;
        }
        let (w, b) = (c / 64, c % 64);
        let present = self.words[w] & (1 << b) != 0;
        self.words[w] &= !(1 << b);
        present
    }

    #[inline]
    pub fn contains(&self, cell: u32) -> bool {
        let c = cell as usize;
        c < self.universe && self.words[c / 64] & (1 << (c % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Ascending cell indices.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros();
                rest &= rest - 1;
                Some(wi as u32 * 64 + bit)
            })
        })
    }

    #[inline]
    pub fn intersects(&self, other: &CellSet) -> bool {
        debug_assert_eq!(self.universe, other.universe);
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union_with(&mut self, other: &CellSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &CellSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn subtract(&mut self, other: &CellSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }
}

impl fmt::Debug for CellSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Per-cell distance in meters to the nearest seed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn get(&self, cell: u32) -> f64 {
        self.dist[cell as usize]
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.dist[iy * self.width + ix]
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }
}

/// Squared distance transform of one line of samples.
///
/// `f[q]` is the squared distance carried into this pass, `INFINITY` where no
/// seed is known. Lower envelope of parabolas (Felzenszwalb & Huttenlocher);
/// infinite samples are skipped so an empty line stays infinite.
fn squared_transform_line(f: &[f64], out: &mut [f64], sites: &mut [usize], bounds: &mut [f64]) {
    let n = f.len();
    let mut k: Option<usize> = None;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        match k {
            None => {
                sites[0] = q;
                bounds[0] = f64::NEG_INFINITY;
                bounds[1] = f64::INFINITY;
                k = Some(0);
            }
            Some(mut top) => {
                let meet = |v: usize| (fq - (f[v] + (v * v) as f64)) / (2.0 * (q as f64 - v as f64));
                let mut s = meet(sites[top]);
                // bounds[0] is -inf, so this stops at the first site at the latest
                while s <= bounds[top] {
                    top -= 1;
                    s = meet(sites[top]);
                }
                top += 1;
                sites[top] = q;
                bounds[top] = s;
                bounds[top + 1] = f64::INFINITY;
                k = Some(top);
            }
        }
    }
    if k.is_none() {
        out.iter_mut().for_each(|d| *d = f64::INFINITY);
        return;
    }
    let mut j = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while bounds[j + 1] < q as f64 {
            j += 1;
        }
        let v = sites[j];
        let d = q.abs_diff(v) as f64;
        *slot = d * d + f[v];
    }
}

/// Squared center-to-center distances in cell units, also infinite without
/// seeds. Values are exact integers stored in `f64`.
pub fn squared_edt(seeds: &CellSet, grid: &GridMap) -> Vec<f64> {
    let (w, h) = (grid.width(), grid.height());
    let mut field = vec![f64::INFINITY; w * h];
    for c in seeds.iter() {
        field[c as usize] = 0.0;
    }
    let longest = w.max(h);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut sites = vec![0usize; longest];
    let mut bounds = vec![0.0; longest + 1];

    for ix in 0..w {
        for iy in 0..h {
            line[iy] = field[iy * w + ix];
        }
        squared_transform_line(&line[..h], &mut out[..h], &mut sites, &mut bounds);
        for iy in 0..h {
            field[iy * w + ix] = out[iy];
        }
    }
    for iy in 0..h {
        let row = &mut field[iy * w..(iy + 1) * w];
        line[..w].copy_from_slice(row);
        squared_transform_line(&line[..w], &mut out[..w], &mut sites, &mut bounds);
        row.copy_from_slice(&out[..w]);
    }
    field
}

/// Exact Euclidean distance transform, linear in the number of cells.
pub fn edt(seeds: &CellSet, grid: &GridMap) -> DistanceField {
    let dist = squared_edt(seeds, grid)
        .into_iter()
        .map(|d2| {
            if d2.is_infinite() {
                NO_SEED_DISTANCE
            } else {
                lattice_distance(d2 as u64, grid.resolution())
            }
        })
        .collect();
    DistanceField {
        width: grid.width(),
        dist,
    }
}

/// All cells within `radius` of some seed.
pub fn inflate(seeds: &CellSet, radius: f64, grid: &GridMap) -> CellSet {
    let mut out = grid.empty_set();
    if seeds.is_empty() {
        return out;
    }
    let field = edt(seeds, grid);
    for (i, &d) in field.values().iter().enumerate() {
        if d <= radius {
            out.insert(i as u32);
        }
    }
    out
}

/// Cells whose centers lie within `radius` of the center of `center_cell`.
pub fn disk_cells(center_cell: u32, radius: f64, grid: &GridMap) -> CellSet {
    let mut out = grid.empty_set();
    let reach = (radius / grid.resolution()).floor() as i64 + 1;
    let (cx, cy) = grid.coords(center_cell);
    let (cx, cy) = (cx as i64, cy as i64);
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if let Some(cell) = grid.index_signed(cx + dx, cy + dy) {
                let d2 = (dx * dx + dy * dy) as u64;
                if lattice_distance(d2, grid.resolution()) <= radius {
                    out.insert(cell);
                }
            }
        }
    }
    out
}
