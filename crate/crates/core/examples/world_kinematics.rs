//! Unicycle kinematics, collisions and sensing in the simulated world.
//!
//! `cargo run --example world_kinematics`

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use convo_robot::assets;
use convo_robot::geometry::Pose2;
use convo_robot::rem::Twist;
use convo_robot::world_sim::{parse_world, NoiseConfig, OccupancyGrid, WorldModel};

fn main() {
    let mut open = WorldModel::new(
        "open",
        OccupancyGrid::new(200, 200, 0.1, (0.0, 0.0)),
        Pose2::new(10.0, 10.0, 0.0),
    );
    let dt = 0.05;
    let (v, w) = (0.4, 0.4);
    let steps = (TAU / w / dt).round() as usize;
    for _ in 0..steps {
        open.step(&Twist::planar(v, w), dt);
    }
    let p = open.pose();
    println!(
        "circle of radius {:.1} m: back at ({:.3}, {:.3}) after {:.2} m of odometry",
        v / w,
        p.x,
        p.y,
        open.odom_distance()
    );

    let mut office = parse_world(assets::OFFICE_WORLD).unwrap();
    let start = office.pose();
    println!(
        "office: {} rooms, robot starts at ({:.1}, {:.1})",
        office.rooms.len(),
        start.x,
        start.y
    );
    // Drive west into the corridor wall.
    office.set_pose(Pose2::new(start.x, start.y, std::f64::consts::PI));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let snap = office.sense(&NoiseConfig::default(), &mut rng);
    println!(
        "wall {:.2} m ahead; {} objects in view",
        snap.range_at(0.0).unwrap_or(f64::INFINITY),
        snap.visible.len()
    );
    let mut ticks = 0;
    while !office.collision() && ticks < 200 {
        office.step(&Twist::planar(0.8, 0.0), dt);
        ticks += 1;
    }
    let p = office.pose();
    println!("hit the wall after {ticks} ticks at x = {:.2}", p.x);
}
