use serde::Serialize;
use serde_json::Value;

/// Integer cell coordinates; `(0, 0)` is the cell at the grid origin (lower left).
pub type Cell = (usize, usize);

/// Free/occupied occupancy grid.
///
/// Cell `(ix, iy)` covers `[origin.x + ix*res, origin.x + (ix+1)*res)` in x and
/// likewise in y, so row 0 is the bottom of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: (f64, f64),
    occupied: Vec<bool>,
}

#[derive(Serialize)]
struct MapMetadata<'a> {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
    /// Row-major from the bottom row, 1 = occupied.
    cells: Vec<u8>,
    name: &'a str,
}

impl OccupancyGrid {
    /// All-free grid. Panics if a dimension is zero or the resolution is not positive.
    pub fn new(width: usize, height: usize, resolution: f64, origin: (f64, f64)) -> Self {
        assert!(width >= 1 && height >= 1, "grid must have at least one cell");
        assert!(resolution > 0.0, "resolution must be positive");
        Self {
            width,
            height,
            resolution,
            origin,
            occupied: vec![false; width * height],
        }
    }

    /// Build from text rows of `.` (free) and `#` (occupied), top row first.
    pub fn from_rows(rows: &[impl AsRef<str>], resolution: f64, origin: (f64, f64)) -> Result<Self, String> {
        let height = rows.len();
        if height == 0 {
            return Err("grid has no rows".into());
        }
        let width = rows[0].as_ref().chars().count();
        if width == 0 {
            return Err("grid rows are empty".into());
        }
        if resolution.is_nan() || resolution <= 0.0 {
            return Err(format!("resolution must be > 0, got {resolution}"));
        }
        let mut grid = Self::new(width, height, resolution, origin);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() != width {
                return Err(format!("row {r} has {} cells, expected {width}", row.chars().count()));
            }
            let iy = height - 1 - r;
            for (ix, ch) in row.chars().enumerate() {
                match ch {
                    '.' => {}
                    '#' => grid.set_occupied((ix, iy), true),
                    other => return Err(format!("row {r} column {ix}: unexpected '{other}'")),
                }
            }
        }
        Ok(grid)
    }

    /// Text rows, top row first.
    pub fn to_rows(&self) -> Vec<String> {
        (0..self.height)
            .rev()
            .map(|iy| {
                (0..self.width)
                    .map(|ix| if self.is_occupied((ix, iy)) { '#' } else { '.' })
                    .collect()
            })
            .collect()
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

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    /// World extent in meters (x, y).
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    fn index(&self, (ix, iy): Cell) -> usize {
        iy * self.width + ix
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.occupied[self.index(cell)]
    }

    pub fn set_occupied(&mut self, cell: Cell, occupied: bool) {
        let i = self.index(cell);
        self.occupied[i] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// Signed cell coordinates of a world point (may be out of bounds).
    pub fn world_to_cell_signed(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin.0) / self.resolution).floor() as i64,
            ((y - self.origin.1) / self.resolution).floor() as i64,
        )
    }

    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<Cell> {
        let (ix, iy) = self.world_to_cell_signed(x, y);
        self.cell_checked(ix, iy)
    }

    pub fn cell_checked(&self, ix: i64, iy: i64) -> Option<Cell> {
        (ix >= 0 && iy >= 0 && (ix as usize) < self.width && (iy as usize) < self.height)
            .then_some((ix as usize, iy as usize))
    }

    pub fn cell_center(&self, (ix, iy): Cell) -> (f64, f64) {
        (
            self.origin.0 + (ix as f64 + 0.5) * self.resolution,
            self.origin.1 + (iy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.world_to_cell(x, y).is_some()
    }

    /// True when the point is inside the grid and on a free cell.
    pub fn is_free_at(&self, x: f64, y: f64) -> bool {
        self.world_to_cell(x, y).is_some_and(|c| !self.is_occupied(c))
    }

    fn blocked_signed(&self, ix: i64, iy: i64) -> bool {
        self.cell_checked(ix, iy).is_none_or(|c| self.is_occupied(c))
    }

    /// Distance along the ray from `(x, y)` in direction `angle` to the first
    /// occupied (or out-of-grid) cell, if one is met within `max_range`.
    /// Returns `Some(0.0)` if the start itself is blocked.
    pub fn raycast(&self, x: f64, y: f64, angle: f64, max_range: f64) -> Option<f64> {
        self.cast(x, y, angle, max_range, true)
    }

    /// Like [`raycast`](Self::raycast) but leaving the grid is not a hit:
    /// only occupied cells return a range, as a range sensor would see.
    pub fn raycast_obstacles(&self, x: f64, y: f64, angle: f64, max_range: f64) -> Option<f64> {
        self.cast(x, y, angle, max_range, false)
    }

    fn cast(&self, x: f64, y: f64, angle: f64, max_range: f64, bounds_block: bool) -> Option<f64> {
        let (ux, uy) = (angle.cos(), angle.sin());
        let (mut ix, mut iy) = self.world_to_cell_signed(x, y);
        if self.cell_checked(ix, iy).is_none() && !bounds_block {
            return None;
        }
        if self.blocked_signed(ix, iy) {
            return Some(0.0);
        }
        let res = self.resolution;
        let (step_x, step_y) = (ux.signum() as i64, uy.signum() as i64);
        let boundary = |i: i64, step: i64, o: f64| o + (i + i64::from(step > 0)) as f64 * res;
        let mut t_max_x = if ux.abs() < 1e-15 {
            f64::INFINITY
        } else {
            (boundary(ix, step_x, self.origin.0) - x) / ux
        };
        let mut t_max_y = if uy.abs() < 1e-15 {
            f64::INFINITY
        } else {
            (boundary(iy, step_y, self.origin.1) - y) / uy
        };
        let t_delta_x = if ux.abs() < 1e-15 {
            f64::INFINITY
        } else {
            res / ux.abs()
        };
        let t_delta_y = if uy.abs() < 1e-15 {
            f64::INFINITY
        } else {
            res / uy.abs()
        };
        loop {
            let t;
            if t_max_x < t_max_y {
                t = t_max_x;
                ix += step_x;
                t_max_x += t_delta_x;
            } else {
                t = t_max_y;
                iy += step_y;
                t_max_y += t_delta_y;
            }
            if t > max_range {
                return None;
            }
            if !bounds_block && self.cell_checked(ix, iy).is_none() {
                return None;
            }
            if self.blocked_signed(ix, iy) {
                return Some(t.max(0.0));
            }
        }
    }

    /// JSON map metadata served to chat clients.
    pub fn metadata_json(&self, name: &str) -> Value {
        let meta = MapMetadata {
            width: self.width,
            height: self.height,
            resolution: self.resolution,
            origin: [self.origin.0, self.origin.1],
            cells: self.occupied.iter().map(|&o| u8::from(o)).collect(),
            name,
        };
        serde_json::to_value(meta).expect("metadata serializes")
    }
}
