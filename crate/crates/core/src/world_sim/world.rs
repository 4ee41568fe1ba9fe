use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::grid::OccupancyGrid;
use crate::geometry::{wrap_angle, Pose2};
use crate::rem::Twist;

/// A labeled object in the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub label: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub radius: f64,
}

/// A named rectangular region (a room).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub label: String,
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Room {
    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.min[0] + self.max[0]), 0.5 * (self.min[1] + self.max[1]))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2,
    pub twist: Twist,
}

/// Range-sensor and camera geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Horizontal camera field of view, radians.
    pub fov: f64,
    pub max_range: f64,
    /// Number of evenly spaced scan beams over the full circle.
    pub beams: usize,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fov: 87f64.to_radians(),
            max_range: 10.0,
            beams: 90,
        }
    }
}

/// Gaussian noise standard deviations applied by [`WorldModel::sense`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub pose_sigma: f64,
    pub yaw_sigma: f64,
    pub range_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRay {
    pub bearing: f64,
    pub range: f64,
}

/// Ground-truth object in view, with bearing relative to heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub object: SceneObject,
    pub bearing: f64,
    pub range: f64,
}

/// Everything the robot senses in one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSnapshot {
    pub stamp: f64,
    pub pose: Pose2,
    pub scan: Vec<ScanRay>,
    pub odom_distance: f64,
    pub visible: Vec<VisibleObject>,
    pub max_range: f64,
    pub fov: f64,
}

impl SensorSnapshot {
    /// Scan range of the beam closest to `bearing`.
    pub fn range_at(&self, bearing: f64) -> Option<f64> {
        self.scan
            .iter()
            .min_by(|a, b| {
                wrap_angle(a.bearing - bearing)
                    .abs()
                    .total_cmp(&wrap_angle(b.bearing - bearing).abs())
            })
            .map(|r| r.range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: RobotState,
    pub collision: bool,
    /// Distance actually travelled this step.
    pub distance: f64,
}

/// The simulated environment: map, objects, robot state and odometry.
#[derive(Debug, Clone)]
pub struct WorldModel {
    pub name: String,
    pub grid: OccupancyGrid,
    pub objects: Vec<SceneObject>,
    pub rooms: Vec<Room>,
    pub sensor: SensorConfig,
    robot: RobotState,
    odom_distance: f64,
    collision: bool,
    ignored_nonplanar: u64,
}

// Keeps a clamped robot strictly inside its free cell.
const WALL_MARGIN: f64 = 1e-9;

impl WorldModel {
    pub fn new(name: impl Into<String>, grid: OccupancyGrid, start: Pose2) -> Self {
        Self {
            name: name.into(),
            grid,
            objects: Vec::new(),
            rooms: Vec::new(),
            sensor: SensorConfig::default(),
            robot: RobotState {
                pose: start,
                twist: Twist::zero(),
            },
            odom_distance: 0.0,
            collision: false,
            ignored_nonplanar: 0,
        }
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn pose(&self) -> Pose2 {
        self.robot.pose
    }

    /// Teleport the robot (tests and scenario setup). Odometry is untouched.
    pub fn set_pose(&mut self, pose: Pose2) {
        self.robot.pose = Pose2::new(pose.x, pose.y, pose.theta);
    }

    pub fn odom_distance(&self) -> f64 {
        self.odom_distance
    }

    /// Whether the most recent step was clamped by an obstacle.
    pub fn collision(&self) -> bool {
        self.collision
    }

    /// Commands received with non-planar components (which are ignored).
    pub fn ignored_nonplanar(&self) -> u64 {
        self.ignored_nonplanar
    }

    /// Labels of the scene objects, unique, in first-seen order.
    pub fn object_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        for o in &self.objects {
            if !labels.contains(&o.label) {
                labels.push(o.label.clone());
            }
        }
        labels
    }

    /// Advance by one Euler step of unicycle kinematics.
    ///
    /// Translation uses the heading at the start of the step. If the segment
    /// would enter an occupied or out-of-grid cell, the robot stops just
    /// before the cell boundary and the collision flag is raised. Panics if
    /// `dt` is not positive.
    pub fn step(&mut self, cmd: &Twist, dt: f64) -> StepOutcome {
        assert!(dt > 0.0, "dt must be positive");
        if cmd.has_nonplanar() {
            self.ignored_nonplanar += 1;
        }
        let pose = self.robot.pose;
        let v = cmd.v_x();
        let length = v.abs() * dt;
        let heading = if v >= 0.0 {
            pose.theta
        } else {
            pose.theta + std::f64::consts::PI
        };
        let mut travelled = length;
        let mut collision = false;
        if length > 0.0 {
            if let Some(hit) = self.grid.raycast(pose.x, pose.y, heading, length) {
                if hit <= length {
                    travelled = (hit - WALL_MARGIN).max(0.0);
                    collision = true;
                }
            }
        }
        let at = |d: f64| (pose.x + d * heading.cos(), pose.y + d * heading.sin());
        let (mut x, mut y) = at(travelled);
        // Rounding in the cast can leave the end point a hair inside a
        // blocked cell; back off until it is free.
        let mut margin = WALL_MARGIN;
        while travelled > 0.0 && !self.grid.is_free_at(x, y) {
            collision = true;
            margin *= 10.0;
            travelled = (travelled - margin).max(0.0);
            (x, y) = at(travelled);
        }
        self.robot = RobotState {
            pose: Pose2::new(x, y, pose.theta + cmd.w_z() * dt),
            twist: *cmd,
        };
        self.odom_distance += travelled;
        self.collision = collision;
        StepOutcome {
            state: self.robot,
            collision,
            distance: travelled,
        }
    }

    /// Emulate the sensors. Visible objects are those inside the camera cone
    /// and range with a clear line of sight; they are reported relative to the
    /// true pose, while the reported pose and scan ranges carry noise.
    pub fn sense<R: Rng + ?Sized>(&self, noise: &NoiseConfig, rng: &mut R) -> SensorSnapshot {
        let truth = self.robot.pose;
        let cfg = &self.sensor;
        let mut gauss = |sigma: f64| -> f64 {
            if sigma > 0.0 {
                Normal::new(0.0, sigma).map(|n| n.sample(rng)).unwrap_or(0.0)
            } else {
                0.0
            }
        };
        let pose = Pose2::new(
            truth.x + gauss(noise.pose_sigma),
            truth.y + gauss(noise.pose_sigma),
            truth.theta + gauss(noise.yaw_sigma),
        );
        let beams = cfg.beams.max(1);
        let scan = (0..beams)
            .map(|i| {
                let bearing =
                    wrap_angle(-std::f64::consts::PI + (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / beams as f64);
                let range = self
                    .grid
                    .raycast_obstacles(truth.x, truth.y, truth.theta + bearing, cfg.max_range)
                    .unwrap_or(cfg.max_range);
                let range = (range + gauss(noise.range_sigma)).clamp(0.0, cfg.max_range);
                ScanRay { bearing, range }
            })
            .collect();
        let visible = self
            .objects
            .iter()
            .filter_map(|obj| {
                let (bearing, range) = truth.observe(obj.x, obj.y);
                if bearing.abs() > cfg.fov / 2.0 || range > cfg.max_range {
                    return None;
                }
                let clear = self
                    .grid
                    .raycast_obstacles(truth.x, truth.y, truth.theta + bearing, range)
                    .is_none_or(|hit| hit >= range - obj.radius.max(0.0) - 1e-9);
                clear.then(|| VisibleObject {
                    object: obj.clone(),
                    bearing,
                    range,
                })
            })
            .collect();
        SensorSnapshot {
            stamp: 0.0,
            pose,
            scan,
            odom_distance: self.odom_distance,
            visible,
            max_range: cfg.max_range,
            fov: cfg.fov,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn open_world() -> WorldModel {
        let grid = OccupancyGrid::new(200, 200, 0.1, (-10.0, -10.0));
        WorldModel::new("open", grid, Pose2::new(0.0, 0.0, 0.0))
    }

    #[test]
    fn euler_translation() {
        let mut w = open_world();
        let out = w.step(&Twist::planar(1.0, 0.0), 0.1);
        assert!((out.state.pose.x - 0.1).abs() < 1e-12);
        assert_eq!(out.state.pose.y, 0.0);
        assert_eq!(out.state.pose.theta, 0.0);
        assert!(!out.collision);
    }

    #[test]
    fn pure_rotation() {
        let mut w = open_world();
        let out = w.step(&Twist::planar(0.0, PI), 0.5);
        assert_eq!((out.state.pose.x, out.state.pose.y), (0.0, 0.0));
        assert!((out.state.pose.theta - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn halts_at_wall_and_flags() {
        // Wall face at x = 0.3 m ahead of a robot at the origin.
        let mut grid = OccupancyGrid::new(40, 20, 0.1, (-1.0, -1.0));
        for iy in 0..20 {
            grid.set_occupied((13, iy), true);
        }
        let mut w = WorldModel::new("wall", grid, Pose2::new(0.0, 0.0, 0.0));
        let mut flagged = false;
        for _ in 0..20 {
            flagged |= w.step(&Twist::planar(1.0, 0.0), 0.05).collision;
        }
        assert!(flagged && w.collision());
        assert!((w.pose().x - 0.3).abs() < 1e-6, "x = {}", w.pose().x);
        assert!(
            w.grid.is_free_at(w.pose().x, w.pose().y),
            "{:?} {:?}",
            w.pose(),
            w.grid.world_to_cell(w.pose().x, w.pose().y)
        );
        assert!((w.odom_distance() - w.pose().x).abs() < 1e-9);
    }

    #[test]
    fn reversing_counts_odometry() {
        let mut w = open_world();
        w.step(&Twist::planar(-0.5, 0.0), 1.0);
        assert!((w.pose().x + 0.5).abs() < 1e-12);
        assert!((w.odom_distance() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nonplanar_components_counted() {
        let mut w = open_world();
        let mut t = Twist::planar(0.0, 0.0);
        t.linear.y = 1.0;
        w.step(&t, 0.1);
        assert_eq!(w.pose().y, 0.0);
        assert_eq!(w.ignored_nonplanar(), 1);
    }

    #[test]
    fn empty_grid_scan_is_max_range() {
        let w = open_world();
        let snap = w.sense(&NoiseConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(snap.scan.len(), 90);
        assert!(snap.scan.iter().all(|r| r.range == 10.0));
    }

    #[test]
    fn object_ahead_is_visible() {
        let mut w = open_world();
        w.objects.push(SceneObject {
            label: "chair".into(),
            x: 2.0,
            y: 0.0,
            radius: 0.2,
        });
        w.objects.push(SceneObject {
            label: "table".into(),
            x: -2.0,
            y: 0.0,
            radius: 0.2,
        });
        let snap = w.sense(&NoiseConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(snap.visible.len(), 1);
        let v = &snap.visible[0];
        assert_eq!(v.object.label, "chair");
        assert!(v.bearing.abs() < 1e-12);
        assert!((v.range - 2.0).abs() < 1e-12);
    }

    #[test]
    fn walls_occlude_objects() {
        let mut grid = OccupancyGrid::new(60, 20, 0.1, (-1.0, -1.0));
        for iy in 0..20 {
            grid.set_occupied((20, iy), true);
        }
        let mut w = WorldModel::new("occ", grid, Pose2::new(0.0, 0.0, 0.0));
        w.objects.push(SceneObject {
            label: "person".into(),
            x: 2.0,
            y: 0.0,
            radius: 0.2,
        });
        let snap = w.sense(&NoiseConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(snap.visible.is_empty());
    }

    #[test]
    fn noiseless_sense_is_deterministic() {
        let mut w = open_world();
        w.objects.push(SceneObject {
            label: "chair".into(),
            x: 1.0,
            y: 0.5,
            radius: 0.2,
        });
        let a = w.sense(&NoiseConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        let b = w.sense(&NoiseConfig::default(), &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }

    #[test]
    fn pose_noise_matches_sigma() {
        let w = open_world();
        let noise = NoiseConfig {
            pose_sigma: 0.05,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..1000).map(|_| w.sense(&noise, &mut rng).pose.x).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let sd = var.sqrt();
        assert!((sd - 0.05).abs() <= 0.01, "sample sd {sd}");
    }
}
