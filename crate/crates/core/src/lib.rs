//! Conversational robot command and control over a simulated robot.
//!
//! Chat text is decoded into intents ([`nlu`]), grounded against a simulated
//! scene ([`perception`]), dispatched onto a differential-drive robot
//! ([`rem`], [`planner`], [`world_sim`]) over a pub/sub bus ([`msgbus`]),
//! and scored from the interaction log ([`metrics`]).

pub mod assets;
pub mod cli;
pub mod geometry;
pub mod metrics;
pub mod msgbus;
pub mod nlu;
pub mod perception;
pub mod planner;
pub mod rem;
pub mod session;
pub mod world_sim;
