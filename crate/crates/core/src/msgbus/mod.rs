//! Topic-based publish/subscribe bus connecting the nodes, plus the network
//! bridge that exposes chat and telemetry topics to external clients.

mod bridge;
mod bus;
mod clock;
mod message;

pub use bridge::{
    bridge_serve, bridge_serve_with, envelope_frame, parse_client_frame, BridgeError, BridgeHandle, BridgeOptions,
};
pub use bus::{create_bus, Bus, BusConfig, BusError, Envelope, Subscription, Topic, DEFAULT_QUEUE_CAPACITY};
pub use clock::{Clock, FakeClock, SystemClock};
pub use message::{topics, ChatMessage, DiagMsg, IntentMsg, Message, MessageKind, PathMsg, PoseMsg};
