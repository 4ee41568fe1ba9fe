use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::{Scenario, SessionError, DETECTION_ID_BASE};
use crate::geometry::Pose2;
use crate::msgbus::{bridge_serve_with, topics, BridgeHandle, BridgeOptions, Bus, Envelope, Message, Subscription};
use crate::nlu::{InteractionLog, InteractionRecord, LlmNode, LogError};
use crate::perception::PerceptionNode;
use crate::rem::{ExecConfig, Executor, Twist};
use crate::world_sim::{run_loop_with, LoopOptions, NoiseConfig, SimHandle};

/// Topics forwarded to bridge clients.
pub const BRIDGE_TOPICS: &[&str] = &[
    topics::CHAT_OUT,
    topics::POSE,
    topics::DETECTIONS,
    topics::NAV_STATUS,
    topics::NAV_PATH,
    topics::CMD_VEL,
    topics::EXEC_EVENTS,
];

#[derive(Debug, Clone)]
pub struct LiveOptions {
    pub rate_hz: f64,
    pub noise: NoiseConfig,
    pub perception_sigma: f64,
    pub sense_every: u64,
    pub seed: u64,
    pub exec: ExecConfig,
    /// Bridge address; `None` runs without a bridge. Port 0 picks a free one.
    pub bridge: Option<String>,
    /// Interaction log file (JSON lines, appended).
    pub log_path: Option<PathBuf>,
    pub log_detections: bool,
}

impl Default for LiveOptions {
    fn default() -> Self {
        Self {
            rate_hz: 20.0,
            noise: NoiseConfig::default(),
            perception_sigma: 0.0,
            sense_every: 4,
            seed: 0,
            exec: ExecConfig::default(),
            bridge: None,
            log_path: None,
            log_detections: false,
        }
    }
}

/// What a live session left behind.
#[derive(Debug, Clone)]
pub struct LiveSummary {
    pub records: Vec<InteractionRecord>,
    pub final_pose: Pose2,
    /// The last Twist published on `cmd_vel`.
    pub last_twist: Option<Twist>,
}

/// Every node on its own thread against the system clock, with the bridge
/// serving external chat clients.
pub struct LiveSession {
    bus: Bus,
    stop: Arc<AtomicBool>,
    sim: Option<SimHandle>,
    rem: Option<JoinHandle<()>>,
    nodes: Vec<JoinHandle<()>>,
    log: Option<JoinHandle<Result<Vec<InteractionRecord>, LogError>>>,
    bridge: Option<BridgeHandle>,
    cmd_watch: Subscription,
}

fn spawn_loop(stop: &Arc<AtomicBool>, mut body: impl FnMut() + Send + 'static) -> JoinHandle<()> {
    let stop = stop.clone();
    thread::spawn(move || {
        while !stop.load(Ordering::SeqCst) {
            body();
        }
    })
}

impl LiveSession {
    pub fn start(scenario: &Scenario, opts: LiveOptions) -> Result<Self, SessionError> {
        assert!(opts.rate_hz > 0.0, "rate must be positive");
        let bus = Bus::new();
        let stop = Arc::new(AtomicBool::new(false));
        let cmd_watch = bus.subscribe(topics::CMD_VEL)?;
        let grammar = scenario.grounded_grammar();
        let backend = scenario.make_backend(&grammar);

        let log = match &opts.log_path {
            Some(p) => InteractionLog::to_file(p)?,
            None => InteractionLog::in_memory(),
        };
        let log_thread = {
            let (records, exec, nav) = (
                bus.subscribe(topics::LOG_INTERACTION)?,
                bus.subscribe(topics::EXEC_EVENTS)?,
                bus.subscribe(topics::NAV_STATUS)?,
            );
            let stop = stop.clone();
            thread::spawn(move || {
                let mut log = log;
                let drain = |log: &mut InteractionLog| -> Result<(), LogError> {
                    // Events first: a visible Ended implies its NavStatus is visible too.
                    let e = exec.drain();
                    let n = nav.drain();
                    for env in records.drain().iter().chain(&n).chain(&e) {
                        log.ingest(env)?;
                    }
                    Ok(())
                };
                while !stop.load(Ordering::SeqCst) {
                    drain(&mut log)?;
                    thread::sleep(Duration::from_millis(5));
                }
                drain(&mut log)?;
                log.close()
            })
        };

        let mut nodes = Vec::new();
        {
            let chat = bus.subscribe(topics::CHAT_IN)?;
            let ctx: Vec<Subscription> = [
                topics::SENSORS,
                topics::DETECTIONS,
                topics::NAV_STATUS,
                topics::EXEC_EVENTS,
            ]
            .iter()
            .map(|t| bus.subscribe(t))
            .collect::<Result<_, _>>()?;
            let mut llm = LlmNode::new(Arc::new(grammar), backend);
            let bus = bus.clone();
            nodes.push(spawn_loop(&stop, move || {
                let Some(env) = chat.recv_timeout(Duration::from_millis(10)) else {
                    return;
                };
                for s in &ctx {
                    s.drain().iter().for_each(|e| llm.observe(e));
                }
                if let Some(msg) = env.payload.as_chat() {
                    let gui_sent = msg.sent.unwrap_or(env.stamp);
                    if let Err(e) = llm.handle(msg, gui_sent, &bus) {
                        log::error!("language node: {e}");
                    }
                }
            }));
        }

        if let Some(set) = scenario.descriptions() {
            let mut node = PerceptionNode::new(scenario.embeddings.clone(), set, opts.perception_sigma, opts.seed)?;
            let sensors = bus.subscribe(topics::SENSORS)?;
            let bus = bus.clone();
            let log_detections = opts.log_detections;
            let mut next_id = DETECTION_ID_BASE;
            nodes.push(spawn_loop(&stop, move || {
                let Some(first) = sensors.recv_timeout(Duration::from_millis(20)) else {
                    return;
                };
                let env = sensors.drain().pop().unwrap_or(first);
                let Message::Sensors(snap) = &*env.payload else { return };
                match node.perceive_and_publish(snap, &bus) {
                    Ok(scored) if log_detections => {
                        for sd in &scored {
                            let rec = InteractionRecord::detection(next_id, sd);
                            next_id += 1;
                            let _ = bus.publish(topics::LOG_INTERACTION, Message::Interaction(Box::new(rec)));
                        }
                    }
                    Ok(_) => {}
                    Err(e) => log::error!("perception: {e}"),
                }
            }));
        }

        let rem = {
            let intents = bus.subscribe(topics::INTENT)?;
            let poses = bus.subscribe(topics::POSE)?;
            let mut executor = Executor::new(opts.exec, scenario.locations.clone(), scenario.patterns.clone())
                .with_map(&scenario.world.grid);
            let mut pose = scenario.world.pose();
            let bus = bus.clone();
            let stop = stop.clone();
            let period = Duration::from_secs_f64(1.0 / opts.rate_hz);
            thread::spawn(move || {
                let mut next = Instant::now();
                while !stop.load(Ordering::SeqCst) {
                    if let Some(p) = poses.drain().last().and_then(pose_of) {
                        pose = p;
                    }
                    for env in intents.drain() {
                        if let Message::Intent(im) = &*env.payload {
                            if let Err(e) = executor.dispatch(&im.intent, Some(im.interaction), bus.now(), pose, &bus) {
                                log::error!("executor: {e}");
                            }
                        }
                    }
                    if let Err(e) = executor.tick(bus.now(), pose, &bus) {
                        log::error!("executor: {e}");
                    }
                    next += period;
                    let now = Instant::now();
                    if next > now {
                        let wait = next - now;
                        // Wake early for new intents.
                        if let Some(env) = intents.recv_timeout(wait) {
                            if let Message::Intent(im) = &*env.payload {
                                let _ = executor.dispatch(&im.intent, Some(im.interaction), bus.now(), pose, &bus);
                            }
                        }
                    } else {
                        next = now;
                    }
                }
                if let Err(e) = executor.stop(bus.now(), &bus) {
                    log::error!("final stop: {e}");
                }
            })
        };

        let sim = run_loop_with(
            scenario.world.clone(),
            &bus,
            LoopOptions {
                rate_hz: opts.rate_hz,
                noise: opts.noise,
                sense_every: opts.sense_every,
                seed: opts.seed,
            },
        )?;

        let bridge = match &opts.bridge {
            Some(bind) => Some(bridge_serve_with(
                &bus,
                BridgeOptions {
                    bind: bind.clone(),
                    exposed: BRIDGE_TOPICS.iter().map(|s| s.to_string()).collect(),
                    map: Some(scenario.world.grid.metadata_json(&scenario.world.name)),
                },
            )?),
            None => None,
        };

        Ok(Self {
            bus,
            stop,
            sim: Some(sim),
            rem: Some(rem),
            nodes,
            log: Some(log_thread),
            bridge,
            cmd_watch,
        })
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    pub fn bridge_addr(&self) -> Option<SocketAddr> {
        self.bridge.as_ref().map(BridgeHandle::local_addr)
    }

    pub fn bridge(&self) -> Option<&BridgeHandle> {
        self.bridge.as_ref()
    }

    /// Stop every node. The executor publishes a final zero Twist before the
    /// simulation halts, so the robot is left stationary.
    pub fn shutdown(mut self) -> Result<LiveSummary, SessionError> {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(rem) = self.rem.take() {
            rem.join().map_err(|_| SessionError::Thread("executor"))?;
        }
        for n in self.nodes.drain(..) {
            n.join().map_err(|_| SessionError::Thread("node"))?;
        }
        let world = self.sim.take().expect("sim runs until shutdown").stop();
        // Give the bridge a moment to forward the final frames.
        thread::sleep(Duration::from_millis(50));
        if let Some(b) = self.bridge.take() {
            b.shutdown();
        }
        let records = self
            .log
            .take()
            .expect("log runs until shutdown")
            .join()
            .map_err(|_| SessionError::Thread("log"))??;
        let last_twist = self
            .cmd_watch
            .drain()
            .last()
            .and_then(|e| e.payload.as_twist().copied());
        Ok(LiveSummary {
            records,
            final_pose: world.pose(),
            last_twist,
        })
    }
}

impl Drop for LiveSession {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
    }
}

fn pose_of(env: &Envelope) -> Option<Pose2> {
    match &*env.payload {
        Message::Pose(p) => Some(Pose2::new(p.x, p.y, p.theta)),
        _ => None,
    }
}
