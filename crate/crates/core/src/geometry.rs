//! Planar pose helpers shared by the simulator, perception and navigation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Wrap an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// A planar pose: position in meters, heading in radians within (-π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }

    /// World position of a point seen at `bearing` (relative to heading) and
    /// `range` from this pose.
    pub fn project(&self, bearing: f64, range: f64) -> (f64, f64) {
        let a = self.theta + bearing;
        (self.x + range * a.cos(), self.y + range * a.sin())
    }

    /// Bearing (relative to heading) and range to a world point.
    pub fn observe(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.x, y - self.y);
        (wrap_angle(dy.atan2(dx) - self.theta), dx.hypot(dy))
    }
}
