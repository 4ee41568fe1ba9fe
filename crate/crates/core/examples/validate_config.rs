//! Loading configuration files and reporting every violation at once.
//!
//! `cargo run --example validate_config`

use convo_robot::rem::{ConfigError, LocationRegistry, MotionPatternTable, TwistLimits};
use convo_robot::world_sim::{parse_world, WorldError};

fn main() {
    let patterns = r#"
[[patterns]]
name = "sprint"
steps = [{ vx = 3.0, duration = 2.0 }]

[[patterns]]
name = "wiggle"
steps = [{ wz = 1.0, duration = 0.5 }, { wz = -1.0, duration = -0.5 }]
"#;
    match MotionPatternTable::parse(patterns, &TwistLimits::default()) {
        Err(ConfigError::Invalid { violations, .. }) => violations.iter().for_each(|v| println!("patterns: {v}")),
        other => println!("patterns: {other:?}"),
    }

    let locations = r#"
[[locations]]
label = "dock"
x = 1.0
y = 2.0
z = 0.6
w = 0.6
"#;
    match LocationRegistry::parse(locations) {
        Err(ConfigError::Invalid { violations, .. }) => violations.iter().for_each(|v| println!("locations: {v}")),
        other => println!("locations: {other:?}"),
    }

    let world = r#"
name = "tiny"

[grid]
width = 4
height = 3
resolution = 0.5
origin = [0.0, 0.0]
rows = ['####', '#..#', '####']

[robot_start]
x = 0.2
y = 0.2
theta = 0.0

[[objects]]
label = "lamp"
x = 9.0
y = 0.75
radius = 0.2
"#;
    match parse_world(world) {
        Err(WorldError::Invalid(v)) => v.iter().for_each(|v| println!("world: {v}")),
        Err(e) => println!("world: {e}"),
        Ok(w) => println!("world '{}' is valid", w.name),
    }
}
