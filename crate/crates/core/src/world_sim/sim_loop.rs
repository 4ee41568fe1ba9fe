use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::world::{NoiseConfig, WorldModel};
use crate::msgbus::{topics, Bus, BusError, Message, PoseMsg};
use crate::rem::Twist;

#[derive(Debug, Clone)]
pub struct LoopOptions {
    pub rate_hz: f64,
    pub noise: NoiseConfig,
    /// Publish a sensor snapshot every this many ticks.
    pub sense_every: u64,
    pub seed: u64,
}

impl Default for LoopOptions {
    fn default() -> Self {
        Self {
            rate_hz: 20.0,
            noise: NoiseConfig::default(),
            sense_every: 1,
            seed: 0,
        }
    }
}

pub fn pose_msg(world: &WorldModel) -> PoseMsg {
    let p = world.pose();
    PoseMsg {
        x: p.x,
        y: p.y,
        z: 0.0,
        theta: p.theta,
    }
}

/// A simulation loop running on its own thread.
pub struct SimHandle {
    stop: Arc<AtomicBool>,
    ticks: Arc<AtomicU64>,
    thread: Option<JoinHandle<WorldModel>>,
}

impl SimHandle {
    pub fn ticks(&self) -> u64 {
        self.ticks.load(Ordering::SeqCst)
    }

    /// Stop the loop and hand back the final world state.
    pub fn stop(mut self) -> WorldModel {
        self.stop.store(true, Ordering::SeqCst);
        self.thread
            .take()
            .expect("sim thread present until stopped")
            .join()
            .expect("sim thread panicked")
    }
}

impl Drop for SimHandle {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Run the world at `rate_hz`: each tick applies the newest `cmd_vel`
/// (zero until one arrives), steps, then publishes `pose` and `sensors`.
pub fn run_loop(world: WorldModel, bus: &Bus, rate_hz: f64) -> Result<SimHandle, BusError> {
    run_loop_with(
        world,
        bus,
        LoopOptions {
            rate_hz,
            ..Default::default()
        },
    )
}

pub fn run_loop_with(mut world: WorldModel, bus: &Bus, opts: LoopOptions) -> Result<SimHandle, BusError> {
    assert!(opts.rate_hz > 0.0, "rate must be positive");
    let cmd_sub = bus.subscribe(topics::CMD_VEL)?;
    let bus = bus.clone();
    let stop = Arc::new(AtomicBool::new(false));
    let ticks = Arc::new(AtomicU64::new(0));
    let (stop_flag, tick_counter) = (stop.clone(), ticks.clone());
    let period = Duration::from_secs_f64(1.0 / opts.rate_hz);
    let dt = 1.0 / opts.rate_hz;
    let thread = thread::spawn(move || {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut cmd = Twist::zero();
        let mut next = Instant::now();
        let mut tick: u64 = 0;
        while !stop_flag.load(Ordering::SeqCst) {
            if let Some(env) = cmd_sub.latest() {
                if let Message::Twist(t) = &*env.payload {
                    cmd = *t;
                }
            }
            world.step(&cmd, dt);
            let _ = bus.publish(topics::POSE, Message::Pose(pose_msg(&world)));
            if tick.is_multiple_of(opts.sense_every.max(1)) {
                let mut snap = world.sense(&opts.noise, &mut rng);
                snap.stamp = bus.now();
                let _ = bus.publish(topics::SENSORS, Message::Sensors(Box::new(snap)));
            }
            tick += 1;
            tick_counter.store(tick, Ordering::SeqCst);
            next += period;
            let now = Instant::now();
            if next > now {
                thread::sleep(next - now);
            } else {
                next = now;
            }
        }
        world
    });
    Ok(SimHandle {
        stop,
        ticks,
        thread: Some(thread),
    })
}
