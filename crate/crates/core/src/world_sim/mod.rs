//! 2D simulated environment: occupancy grid, labeled objects, unicycle robot
//! kinematics and sensor emulation (pose, range scan, visible objects).

mod file;
mod grid;
mod sim_loop;
mod world;

pub use file::{load_world, parse_world, WorldError, WorldFile, WorldViolation};
pub use grid::{Cell, OccupancyGrid};
pub use sim_loop::{pose_msg, run_loop, run_loop_with, LoopOptions, SimHandle};
pub use world::{
    NoiseConfig, RobotState, Room, ScanRay, SceneObject, SensorConfig, SensorSnapshot, StepOutcome, VisibleObject,
    WorldModel,
};
