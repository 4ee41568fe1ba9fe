use crate::world_sim::OccupancyGrid;

/// Default inflation: the robot footprint radius.
pub const DEFAULT_INFLATION_RADIUS: f64 = 0.3;

/// Mark every free cell whose center lies within `radius` of an occupied
/// cell's square. Radius 0 returns an identical grid.
pub fn inflate(grid: &OccupancyGrid, radius: f64) -> OccupancyGrid {
    assert!(radius >= 0.0, "inflation radius must be non-negative");
    let mut out = grid.clone();
    if radius == 0.0 {
        return out;
    }
    let res = grid.resolution();
    let reach = (radius / res).ceil() as i64 + 1;
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    for oy in 0..h {
        for ox in 0..w {
            if !grid.is_occupied((ox as usize, oy as usize)) {
                continue;
            }
            for cy in (oy - reach).max(0)..=(oy + reach).min(h - 1) {
                for cx in (ox - reach).max(0)..=(ox + reach).min(w - 1) {
                    if cell_to_square(cx - ox, cy - oy) * res <= radius + 1e-12 {
                        out.set_occupied((cx as usize, cy as usize), true);
                    }
                }
            }
        }
    }
    out
}

/// Distance in cells from a cell center to the square of the cell offset by
/// (dx, dy).
pub(crate) fn cell_to_square(dx: i64, dy: i64) -> f64 {
    let gap = |d: i64| ((d.abs() as f64) - 0.5).max(0.0);
    gap(dx).hypot(gap(dy))
}
