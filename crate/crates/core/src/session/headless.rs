use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Scenario, SessionError, SessionOptions, DETECTION_ID_BASE};
use crate::geometry::Pose2;
use crate::msgbus::{topics, Bus, BusConfig, ChatMessage, FakeClock, Message, Subscription};
use crate::nlu::{Handled, InteractionLog, InteractionRecord, LlmNode, SimulatedLatency};
use crate::perception::PerceptionNode;
use crate::rem::{Executor, Twist};
use crate::world_sim::{pose_msg, WorldModel};

struct Subs {
    chat_in: Subscription,
    intent: Subscription,
    cmd_vel: Subscription,
    sensors: Subscription,
    detections: Subscription,
    nav: Subscription,
    exec: Subscription,
    records: Subscription,
}

/// Single-threaded session on a fake clock: every node runs in lockstep
/// with the simulation, so runs are deterministic and faster than real time.
///
/// Each tick the executor acts on the current pose, the world integrates the
/// newest `cmd_vel`, the clock advances, pose (and every `sense_every` ticks
/// sensors and detections) are published, and the interaction log catches up.
pub struct Session {
    opts: SessionOptions,
    clock: FakeClock,
    bus: Bus,
    world: WorldModel,
    executor: Executor,
    llm: LlmNode,
    perception: Option<PerceptionNode>,
    log: InteractionLog,
    rng: ChaCha8Rng,
    subs: Subs,
    cmd: Twist,
    ticks: u64,
    next_detection_id: u64,
}

impl Session {
    pub fn new(scenario: &Scenario, opts: SessionOptions) -> Result<Self, SessionError> {
        Self::with_log(scenario, opts, InteractionLog::in_memory())
    }

    pub fn with_log(scenario: &Scenario, opts: SessionOptions, log: InteractionLog) -> Result<Self, SessionError> {
        assert!(opts.rate_hz > 0.0, "rate must be positive");
        let clock = FakeClock::new(opts.start_time);
        let bus = Bus::with_config(Arc::new(clock.clone()), BusConfig::default());
        let grammar = scenario.grounded_grammar();
        let mut backend = scenario.make_backend(&grammar);
        if opts.backend_latency > 0.0 {
            backend = Arc::new(SimulatedLatency::new(backend, clock.clone(), opts.backend_latency));
        }
        let mut llm = LlmNode::new(Arc::new(grammar), backend);
        llm.staleness = opts.staleness;
        let executor = Executor::new(opts.exec, scenario.locations.clone(), scenario.patterns.clone())
            .with_map(&scenario.world.grid);
        let perception = match scenario.descriptions() {
            Some(set) if opts.perception => Some(PerceptionNode::new(
                scenario.embeddings.clone(),
                set,
                opts.perception_sigma,
                opts.seed,
            )?),
            _ => None,
        };
        let subs = Subs {
            chat_in: bus.subscribe(topics::CHAT_IN)?,
            intent: bus.subscribe(topics::INTENT)?,
            cmd_vel: bus.subscribe(topics::CMD_VEL)?,
            sensors: bus.subscribe(topics::SENSORS)?,
            detections: bus.subscribe(topics::DETECTIONS)?,
            nav: bus.subscribe(topics::NAV_STATUS)?,
            exec: bus.subscribe(topics::EXEC_EVENTS)?,
            records: bus.subscribe(topics::LOG_INTERACTION)?,
        };
        let mut session = Self {
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            opts,
            clock,
            bus,
            world: scenario.world.clone(),
            executor,
            llm,
            perception,
            log,
            subs,
            cmd: Twist::zero(),
            ticks: 0,
            next_detection_id: DETECTION_ID_BASE,
        };
        // Queries before the first tick still see where the robot is.
        let mut snap = session.world.sense(&session.opts.noise, &mut session.rng);
        snap.stamp = session.now();
        session
            .bus
            .publish(topics::POSE, Message::Pose(pose_msg(&session.world)))?;
        session.bus.publish(topics::SENSORS, Message::Sensors(Box::new(snap)))?;
        session.pump()?;
        Ok(session)
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    pub fn clock(&self) -> &FakeClock {
        &self.clock
    }

    pub fn now(&self) -> f64 {
        self.bus.now()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.opts.rate_hz
    }

    pub fn world(&self) -> &WorldModel {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut WorldModel {
        &mut self.world
    }

    pub fn pose(&self) -> Pose2 {
        self.world.pose()
    }

    pub fn executor(&self) -> &Executor {
        &self.executor
    }

    pub fn llm(&self) -> &LlmNode {
        &self.llm
    }

    /// Finished interaction records so far.
    pub fn records(&self) -> &[InteractionRecord] {
        self.log.records()
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Send a chat line as the user would, optionally labeled with the
    /// intended command, and process it immediately.
    pub fn submit(&mut self, text: &str, true_label: Option<&str>) -> Result<Handled, SessionError> {
        let msg = ChatMessage {
            text: text.to_string(),
            sent: Some(self.now()),
            true_label: true_label.map(str::to_string),
        };
        self.bus.publish(topics::CHAT_IN, msg)?;
        let mut handled = self.process_chat()?;
        Ok(handled.pop().expect("the submitted message was handled"))
    }

    /// Handle every chat line waiting on `chat/in`.
    pub fn process_chat(&mut self) -> Result<Vec<Handled>, SessionError> {
        let mut out = Vec::new();
        for env in self.subs.chat_in.drain() {
            let Some(msg) = env.payload.as_chat() else { continue };
            let gui_sent = msg.sent.unwrap_or(env.stamp);
            self.pump()?;
            self.clock.advance(self.opts.pipeline_delay);
            out.push(self.llm.handle(msg, gui_sent, &self.bus)?);
            for ienv in self.subs.intent.drain() {
                if let Message::Intent(im) = &*ienv.payload {
                    let now = self.now();
                    self.executor
                        .dispatch(&im.intent, Some(im.interaction), now, self.world.pose(), &self.bus)?;
                }
            }
            self.pump()?;
        }
        Ok(out)
    }

    /// Advance the whole system by one tick.
    pub fn step(&mut self) -> Result<(), SessionError> {
        self.process_chat()?;
        let now = self.now();
        self.executor.tick(now, self.world.pose(), &self.bus)?;
        if let Some(t) = self
            .subs
            .cmd_vel
            .drain()
            .last()
            .and_then(|e| e.payload.as_twist().copied())
        {
            self.cmd = t;
        }
        let dt = self.dt();
        self.world.step(&self.cmd, dt);
        self.clock.advance(dt);
        self.bus.publish(topics::POSE, Message::Pose(pose_msg(&self.world)))?;
        if self.ticks.is_multiple_of(self.opts.sense_every.max(1)) {
            self.sense()?;
        }
        self.ticks += 1;
        self.pump()
    }

    fn sense(&mut self) -> Result<(), SessionError> {
        let mut snap = self.world.sense(&self.opts.noise, &mut self.rng);
        snap.stamp = self.now();
        self.bus
            .publish(topics::SENSORS, Message::Sensors(Box::new(snap.clone())))?;
        if let Some(p) = &mut self.perception {
            for sd in p.perceive_and_publish(&snap, &self.bus)? {
                if self.opts.log_detections {
                    let rec = InteractionRecord::detection(self.next_detection_id, &sd);
                    self.next_detection_id += 1;
                    self.bus
                        .publish(topics::LOG_INTERACTION, Message::Interaction(Box::new(rec)))?;
                }
            }
        }
        Ok(())
    }

    /// Feed bus traffic to the language node's context and the log. Execution
    /// events are drained before navigation status so that a terminal status
    /// always reaches a record before the event that closes it.
    fn pump(&mut self) -> Result<(), SessionError> {
        let exec = self.subs.exec.drain();
        let nav = self.subs.nav.drain();
        let records = self.subs.records.drain();
        for env in self.subs.sensors.drain().iter().chain(&self.subs.detections.drain()) {
            self.llm.observe(env);
        }
        for env in nav.iter().chain(&exec) {
            self.llm.observe(env);
        }
        for env in records.iter().chain(&nav).chain(&exec) {
            self.log.ingest(env)?;
        }
        Ok(())
    }

    pub fn run_for(&mut self, secs: f64) -> Result<(), SessionError> {
        let end = self.now() + secs;
        while self.now() + 1e-9 < end {
            self.step()?;
        }
        Ok(())
    }

    /// Step until no action is running and every record is finished.
    /// Returns false if `max_secs` of simulated time pass first.
    pub fn run_until_settled(&mut self, max_secs: f64) -> Result<bool, SessionError> {
        let end = self.now() + max_secs;
        loop {
            if self.executor.is_idle() && self.log.pending_count() == 0 && self.subs.chat_in.is_empty() {
                return Ok(true);
            }
            if self.now() >= end {
                return Ok(false);
            }
            self.step()?;
        }
    }

    /// Close the log, returning every record including unfinished ones.
    pub fn finish(self) -> Result<Vec<InteractionRecord>, SessionError> {
        Ok(self.log.close()?)
    }
}
