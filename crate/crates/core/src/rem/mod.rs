//! Robot execution: resolves goals, runs motion patterns, routes queries
//! and stops on stop/unknown commands. Sole publisher of `cmd_vel`.

mod config;
mod executor;
mod status;
mod twist;

pub use config::{
    resolve_goal, ConfigError, Location, LocationRegistry, MotionPattern, MotionPatternTable, PatternStep,
    UnknownLocation,
};
pub use executor::{nearest_free, DispatchOutcome, ExecConfig, Executor};
pub use status::{Branch, ExecEvent, ExecPhase, NavState, NavStatus};
pub use twist::{Twist, TwistLimits, Vector3};
