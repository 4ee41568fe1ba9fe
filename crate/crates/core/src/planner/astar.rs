use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world_sim::{Cell, OccupancyGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("start ({x:.2}, {y:.2}) is outside the map")]
    StartOutside { x: f64, y: f64 },
    #[error("goal ({x:.2}, {y:.2}) is outside the map")]
    GoalOutside { x: f64, y: f64 },
    #[error("start cell ({}, {}) is occupied", .0.0, .0.1)]
    StartOccupied(Cell),
    #[error("goal cell ({}, {}) is occupied", .0.0, .0.1)]
    GoalOccupied(Cell),
    #[error("no path between start and goal")]
    Unreachable,
}

impl PlanError {
    /// True for bad inputs, false for a well-posed but unsolvable query.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, PlanError::Unreachable)
    }
}

/// A grid path through cell centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<(f64, f64)>,
    pub cells: Vec<Cell>,
    /// Total length in meters.
    pub cost: f64,
    pub straight_steps: usize,
    pub diagonal_steps: usize,
}

impl Path {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

/// Length in cells of a path with the given step counts.
pub fn step_cost(straight: usize, diagonal: usize) -> f64 {
    straight as f64 + diagonal as f64 * SQRT_2
}

const NEIGHBORS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Cells reachable in one move from `c`. Diagonal moves need both adjacent
/// orthogonal cells free, so paths never clip an obstacle corner.
pub fn successors(grid: &OccupancyGrid, c: Cell) -> impl Iterator<Item = (Cell, bool)> + '_ {
    NEIGHBORS.iter().filter_map(move |&(dx, dy)| {
        let free = |x: i64, y: i64| grid.cell_checked(x, y).filter(|c| !grid.is_occupied(*c));
        let (x, y) = (c.0 as i64, c.1 as i64);
        let n = free(x + dx, y + dy)?;
        let diagonal = dx != 0 && dy != 0;
        if diagonal && (free(x + dx, y).is_none() || free(x, y + dy).is_none()) {
            return None;
        }
        Some((n, diagonal))
    })
}

#[derive(Clone, Copy)]
struct Node {
    f: f64,
    g_straight: usize,
    g_diag: usize,
    cell: Cell,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // min-heap on f, then on cell for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.cell.cmp(&self.cell))
    }
}

/// Shortest 8-connected path between two world points on `grid` (which
/// should already be inflated). Waypoints are cell centers.
pub fn plan(grid: &OccupancyGrid, start: (f64, f64), goal: (f64, f64)) -> Result<Path, PlanError> {
    let s = grid
        .world_to_cell(start.0, start.1)
        .ok_or(PlanError::StartOutside { x: start.0, y: start.1 })?;
    let g = grid
        .world_to_cell(goal.0, goal.1)
        .ok_or(PlanError::GoalOutside { x: goal.0, y: goal.1 })?;
    if grid.is_occupied(s) {
        return Err(PlanError::StartOccupied(s));
    }
    if grid.is_occupied(g) {
        return Err(PlanError::GoalOccupied(g));
    }
    plan_cells(grid, s, g).ok_or(PlanError::Unreachable)
}

pub fn plan_cells(grid: &OccupancyGrid, s: Cell, g: Cell) -> Option<Path> {
    let w = grid.width();
    let idx = |c: Cell| c.1 * w + c.0;
    let h = |c: Cell| (c.0 as f64 - g.0 as f64).hypot(c.1 as f64 - g.1 as f64);
    let n = w * grid.height();
    let mut best: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut parent: Vec<usize> = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    best[idx(s)] = Some((0, 0));
    open.push(Node {
        f: h(s),
        g_straight: 0,
        g_diag: 0,
        cell: s,
    });
    while let Some(node) = open.pop() {
        let i = idx(node.cell);
        if closed[i] {
            continue;
        }
        closed[i] = true;
        if node.cell == g {
            return Some(reconstruct(grid, &parent, s, g, node.g_straight, node.g_diag));
        }
        for (next, diagonal) in successors(grid, node.cell) {
            let j = idx(next);
            if closed[j] {
                continue;
            }
            let (a, b) = if diagonal {
                (node.g_straight, node.g_diag + 1)
            } else {
                (node.g_straight + 1, node.g_diag)
            };
            let better = match best[j] {
                None => true,
                Some((pa, pb)) => step_cost(a, b) < step_cost(pa, pb),
            };
            if better {
                best[j] = Some((a, b));
                parent[j] = i;
                // consistent heuristic, hence admissible
                let step = if diagonal { SQRT_2 } else { 1.0 };
                debug_assert!(h(node.cell) <= step + h(next) + 1e-9);
                open.push(Node {
                    f: step_cost(a, b) + h(next),
                    g_straight: a,
                    g_diag: b,
                    cell: next,
                });
            }
        }
    }
    None
}

fn reconstruct(grid: &OccupancyGrid, parent: &[usize], s: Cell, g: Cell, a: usize, b: usize) -> Path {
    let w = grid.width();
    let mut cells = vec![g];
    let mut cur = g.1 * w + g.0;
    while cells.last() != Some(&s) {
        cur = parent[cur];
        cells.push((cur % w, cur / w));
    }
    cells.reverse();
    Path {
        waypoints: cells.iter().map(|c| grid.cell_center(*c)).collect(),
        cells,
        cost: step_cost(a, b) * grid.resolution(),
        straight_steps: a,
        diagonal_steps: b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty(n: usize) -> OccupancyGrid {
        OccupancyGrid::new(n, n, 1.0, (0.0, 0.0))
    }

    #[test]
    fn start_equals_goal() {
        let p = plan(&empty(5), (2.5, 2.5), (2.5, 2.5)).unwrap();
        assert_eq!(p.waypoints, vec![(2.5, 2.5)]);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn pure_diagonal() {
        let p = plan(&empty(10), (0.5, 0.5), (9.5, 9.5)).unwrap();
        assert!((p.cost - 9.0 * SQRT_2).abs() < 1e-9);
        assert_eq!((p.straight_steps, p.diagonal_steps), (0, 9));
        assert_eq!(p.len(), 10);
    }

    #[test]
    fn errors_are_distinguished() {
        let g = OccupancyGrid::from_rows(&["..#..", "..#..", "..#.."], 1.0, (0.0, 0.0)).unwrap();
        let e = plan(&g, (0.5, 0.5), (4.5, 0.5)).unwrap_err();
        assert_eq!(e, PlanError::Unreachable);
        assert!(!e.is_input_error());
        let e = plan(&g, (2.5, 0.5), (4.5, 0.5)).unwrap_err();
        assert!(matches!(e, PlanError::StartOccupied((2, 0))));
        assert!(e.is_input_error());
        assert!(plan(&g, (0.5, 0.5), (2.5, 1.5)).unwrap_err().is_input_error());
        assert!(plan(&g, (0.5, 0.5), (9.5, 1.5)).unwrap_err().is_input_error());
    }

    #[test]
    fn no_corner_cutting() {
        // diagonal between the two free cells would clip the occupied corners
        let g = OccupancyGrid::from_rows(&[".#", "#."], 1.0, (0.0, 0.0)).unwrap();
        assert_eq!(plan(&g, (0.5, 1.5), (1.5, 0.5)).unwrap_err(), PlanError::Unreachable);
    }

    #[test]
    fn waypoints_adjacent_and_free() {
        let g = OccupancyGrid::from_rows(
            &["........", "..####..", "..#..#..", "..#..#..", "........"],
            0.5,
            (0.0, 0.0),
        )
        .unwrap();
        let p = plan(&g, (0.25, 0.25), (3.75, 2.25)).unwrap();
        for pair in p.cells.windows(2) {
            let dx = pair[0].0.abs_diff(pair[1].0);
            let dy = pair[0].1.abs_diff(pair[1].1);
            assert!(dx <= 1 && dy <= 1 && dx + dy > 0);
        }
        assert!(p.cells.iter().all(|c| !g.is_occupied(*c)));
    }
}
