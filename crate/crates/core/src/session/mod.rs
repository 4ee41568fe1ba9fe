//! Wiring the nodes together: a deterministic headless session on a fake
//! clock for evaluation, and a threaded live session with the bridge.

mod eval;
mod headless;
mod live;
mod scenario;

pub use eval::{parse_corpus, read_corpus, run_eval, CorpusEntry, CorpusError, EvalError, EvalOutcome, GoalSpec};
pub use headless::Session;
pub use live::{LiveOptions, LiveSession, LiveSummary, BRIDGE_TOPICS};
pub use scenario::{BackendChoice, Scenario};

use thiserror::Error;

use crate::msgbus::{BridgeError, BusError};
use crate::nlu::{LogError, DEFAULT_STALENESS};
use crate::perception::PerceptionError;
use crate::rem::ExecConfig;
use crate::world_sim::NoiseConfig;

/// Interaction ids for perception-frame records start here, clear of the
/// ids the language node assigns.
pub const DETECTION_ID_BASE: u64 = 1 << 40;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error("{0} thread panicked")]
    Thread(&'static str),
}

/// Settings for a headless [`Session`].
#[derive(Debug, Clone)]
pub struct SessionOptions {
    pub rate_hz: f64,
    /// Fake-clock start, seconds since the Unix epoch.
    pub start_time: f64,
    pub noise: NoiseConfig,
    pub perception: bool,
    pub perception_sigma: f64,
    /// Sense and perceive every this many ticks.
    pub sense_every: u64,
    /// Delay between a chat line being sent and the language node handling it.
    pub pipeline_delay: f64,
    /// Simulated language-model inference time, charged to the fake clock.
    pub backend_latency: f64,
    pub staleness: f64,
    pub seed: u64,
    pub exec: ExecConfig,
    /// Log one record per detection, for object identification accuracy.
    pub log_detections: bool,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            rate_hz: 20.0,
            start_time: 1_700_000_000.0,
            noise: NoiseConfig::default(),
            perception: true,
            perception_sigma: 0.0,
            sense_every: 4,
            pipeline_delay: 0.0,
            backend_latency: 0.0,
            staleness: DEFAULT_STALENESS,
            seed: 0,
            exec: ExecConfig::default(),
            log_detections: true,
        }
    }
}
