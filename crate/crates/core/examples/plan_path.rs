//! A* on the inflated office map, drawn as ASCII.
//!
//! `cargo run --example plan_path`

use convo_robot::planner::{inflate, plan, DEFAULT_INFLATION_RADIUS};
use convo_robot::session::Scenario;

fn main() {
    let scenario = Scenario::office();
    let grid = inflate(&scenario.world.grid, DEFAULT_INFLATION_RADIUS);
    let start = scenario.world.pose();
    let goal = scenario.locations.get("library").unwrap();
    let path = plan(&grid, (start.x, start.y), (goal.x, goal.y)).unwrap();
    println!(
        "{} waypoints, {:.2} m ({} straight + {} diagonal steps)",
        path.len(),
        path.cost,
        path.straight_steps,
        path.diagonal_steps
    );

    // Every other cell, top row first.
    let on_path: std::collections::HashSet<_> = path.cells.iter().map(|&(x, y)| (x / 2, y / 2)).collect();
    for y in (0..grid.height() / 2).rev() {
        let row: String = (0..grid.width() / 2)
            .map(|x| {
                if on_path.contains(&(x, y)) {
                    '*'
                } else if scenario.world.grid.is_occupied((2 * x, 2 * y)) {
                    '#'
                } else if grid.is_occupied((2 * x, 2 * y)) {
                    ':'
                } else {
                    ' '
                }
            })
            .collect();
        println!("{row}");
    }
}
