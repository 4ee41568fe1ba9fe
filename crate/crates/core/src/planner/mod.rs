//! Grid navigation: obstacle inflation, A* planning, pure-pursuit following
//! and goal tests.

mod astar;
mod follow;
mod inflate;

pub use astar::{plan, plan_cells, step_cost, successors, Path, PlanError};
pub use follow::{follow, goal_reached, rotate, steer, FollowConfig, GoalPose};
pub use inflate::{inflate, DEFAULT_INFLATION_RADIUS};

/// Default goal tolerances.
pub const GOAL_TOLERANCE_POS: f64 = 0.3;
pub const GOAL_TOLERANCE_YAW: f64 = 0.3;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;
    use crate::world_sim::{OccupancyGrid, WorldModel};
    use proptest::prelude::*;

    /// Drive a simulated robot along a planned path, then turn to the goal
    /// yaw. Returns elapsed simulated seconds once the goal test passes.
    fn drive(world: &mut WorldModel, goal: GoalPose, path: &Path, limit: f64) -> Option<f64> {
        let cfg = FollowConfig::default();
        let dt = 0.05;
        let mut waypoints = path.waypoints.clone();
        *waypoints.last_mut().unwrap() = (goal.x, goal.y);
        let mut t = 0.0;
        while t <= limit {
            let pose = world.pose();
            if goal_reached(&pose, &goal, GOAL_TOLERANCE_POS, GOAL_TOLERANCE_YAW) {
                return Some(t);
            }
            let cmd = if goal.position_error(&pose) <= GOAL_TOLERANCE_POS {
                rotate(goal.yaw_error(&pose), &cfg)
            } else {
                follow(&waypoints, &pose, &cfg)
            };
            world.step(&cmd, dt);
            t += dt;
        }
        None
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn follower_converges_in_open_world(gx in 1.0f64..19.0, gy in 1.0f64..19.0, yaw in -3.1f64..3.1) {
            prop_assume!((gx - 10.0).hypot(gy - 10.0) >= 3.0);
            let grid = OccupancyGrid::new(100, 100, 0.2, (0.0, 0.0));
            let mut world = WorldModel::new("open", grid.clone(), Pose2::new(10.0, 10.0, 0.0));
            let path = plan(&inflate(&grid, DEFAULT_INFLATION_RADIUS), (10.0, 10.0), (gx, gy)).unwrap();
            let limit = 3.0 * path.cost / FollowConfig::default().limits.v_max;
            let goal = GoalPose::new(gx, gy, yaw);
            prop_assert!(drive(&mut world, goal, &path, limit).is_some(), "cost {}", path.cost);
        }
    }
}
