use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose2};
use crate::rem::{Twist, TwistLimits};

/// A navigation goal in the map frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl GoalPose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: wrap_angle(yaw),
        }
    }

    pub fn position_error(&self, pose: &Pose2) -> f64 {
        pose.distance_to(self.x, self.y)
    }

    pub fn yaw_error(&self, pose: &Pose2) -> f64 {
        wrap_angle(self.yaw - pose.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FollowConfig {
    pub lookahead: f64,
    pub k_omega: f64,
    pub limits: TwistLimits,
    /// Closer than this to the final waypoint counts as arrived.
    pub arrive_radius: f64,
}

impl Default for FollowConfig {
    fn default() -> Self {
        Self {
            lookahead: 0.5,
            k_omega: 1.2,
            limits: TwistLimits::default(),
            arrive_radius: 1e-6,
        }
    }
}

/// Pure-pursuit step toward the lookahead point on `path`.
pub fn follow(path: &[(f64, f64)], pose: &Pose2, cfg: &FollowConfig) -> Twist {
    assert!(!path.is_empty(), "cannot follow an empty path");
    let last = *path.last().expect("non-empty");
    if pose.distance_to(last.0, last.1) <= cfg.arrive_radius {
        return Twist::zero();
    }
    let nearest = path
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = pose.distance_to(a.1 .0, a.1 .1);
            let db = pose.distance_to(b.1 .0, b.1 .1);
            da.total_cmp(&db)
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let target = path[nearest..]
        .iter()
        .find(|p| pose.distance_to(p.0, p.1) >= cfg.lookahead)
        .copied()
        .unwrap_or(last);
    let (err, _) = pose.observe(target.0, target.1);
    steer(err, cfg)
}

/// Velocity for a heading error: turn proportionally, drive only while
/// roughly facing the target.
pub fn steer(heading_error: f64, cfg: &FollowConfig) -> Twist {
    let v = cfg.limits.v_max * heading_error.cos().max(0.0);
    Twist::planar(v, cfg.k_omega * heading_error).clamped(&cfg.limits)
}

/// Turn in place toward `yaw_error`.
pub fn rotate(yaw_error: f64, cfg: &FollowConfig) -> Twist {
    Twist::planar(0.0, cfg.k_omega * yaw_error).clamped(&cfg.limits)
}

/// Inclusive position and yaw tolerance test.
pub fn goal_reached(pose: &Pose2, goal: &GoalPose, tol_pos: f64, tol_yaw: f64) -> bool {
    goal.position_error(pose) <= tol_pos && goal.yaw_error(pose).abs() <= tol_yaw
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn arrival_is_zero() {
        let t = follow(
            &[(0.0, 0.0), (1.0, 0.0)],
            &Pose2::new(1.0, 0.0, 0.0),
            &FollowConfig::default(),
        );
        assert!(t.is_zero());
    }

    #[test]
    fn straight_ahead() {
        let t = follow(
            &[(0.0, 0.0), (3.0, 0.0)],
            &Pose2::new(0.0, 0.0, 0.0),
            &FollowConfig::default(),
        );
        assert_eq!(t.w_z(), 0.0);
        assert!(t.v_x() > 0.0);
    }

    #[test]
    fn directly_behind_turns_at_limit() {
        let cfg = FollowConfig::default();
        let t = follow(&[(0.0, 0.0), (-3.0, 0.0)], &Pose2::new(0.0, 0.0, 0.0), &cfg);
        assert_eq!(t.v_x(), 0.0);
        assert_eq!(t.w_z().abs(), cfg.limits.w_max);
    }

    #[test]
    fn tolerance_boundaries() {
        let g = GoalPose::new(1.0, 0.0, 0.0);
        assert!(goal_reached(&Pose2::new(1.0, 0.0, 0.0), &g, 0.3, 0.3));
        assert!(goal_reached(&Pose2::new(0.75, 0.0, 0.0), &g, 0.25, 0.3));
        assert!(!goal_reached(&Pose2::new(0.7, 0.0, 0.0), &g, 0.25, 0.3));
        assert!(!goal_reached(&Pose2::new(1.0, 0.0, PI), &g, 0.3, 0.3));
    }
}
