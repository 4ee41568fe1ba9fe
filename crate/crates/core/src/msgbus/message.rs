//! Payload types carried on the bus and their per-topic schema.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::nlu::{Intent, InteractionRecord};
use crate::perception::Detection;
use crate::rem::{ExecEvent, NavStatus, Twist};
use crate::world_sim::SensorSnapshot;

/// Well-known topic names.
pub mod topics {
    pub const CHAT_IN: &str = "chat/in";
    pub const CHAT_OUT: &str = "chat/out";
    pub const CMD_VEL: &str = "cmd_vel";
    pub const DETECTIONS: &str = "detections";
    pub const POSE: &str = "pose";
    pub const SENSORS: &str = "sensors";
    pub const NAV_STATUS: &str = "nav/status";
    pub const NAV_PATH: &str = "nav/path";
    pub const INTENT: &str = "intent";
    pub const EXEC_EVENTS: &str = "exec/events";
    pub const LOG_INTERACTION: &str = "log/interaction";
    pub const DIAG: &str = "diag";
}

/// Text flowing between the chat client and the language node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub text: String,
    /// Client-side send time, when the client reports one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sent: Option<f64>,
    /// Ground-truth label attached by scripted corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_label: Option<String>,
}

impl ChatMessage {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            sent: None,
            true_label: None,
        }
    }
}

/// Planar robot pose; `z` is always 0 for the ground robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseMsg {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
    pub theta: f64,
}

/// Planned path broadcast for visualisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMsg {
    pub goal_label: String,
    pub waypoints: Vec<[f64; 2]>,
}

/// An intent forwarded from the language node to the executor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentMsg {
    pub interaction: u64,
    pub intent: Intent,
}

/// Queue-overflow report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagMsg {
    pub topic: String,
    pub dropped_total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Chat,
    Pose,
    Twist,
    Detections,
    Sensors,
    NavStatus,
    Path,
    Intent,
    ExecEvent,
    Interaction,
    Diag,
}

impl MessageKind {
    /// Schema fixed in advance for the well-known topics.
    pub fn for_topic(topic: &str) -> Option<MessageKind> {
        use topics::*;
        Some(match topic {
            CHAT_IN | CHAT_OUT => MessageKind::Chat,
            CMD_VEL => MessageKind::Twist,
            DETECTIONS => MessageKind::Detections,
            POSE => MessageKind::Pose,
            SENSORS => MessageKind::Sensors,
            NAV_STATUS => MessageKind::NavStatus,
            NAV_PATH => MessageKind::Path,
            INTENT => MessageKind::Intent,
            EXEC_EVENTS => MessageKind::ExecEvent,
            LOG_INTERACTION => MessageKind::Interaction,
            DIAG => MessageKind::Diag,
            _ => return None,
        })
    }
}

/// Any payload the bus can carry.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Chat(ChatMessage),
    Pose(PoseMsg),
    Twist(Twist),
    Detections(Vec<Detection>),
    Sensors(Box<SensorSnapshot>),
    NavStatus(NavStatus),
    Path(PathMsg),
    Intent(IntentMsg),
    ExecEvent(ExecEvent),
    Interaction(Box<InteractionRecord>),
    Diag(DiagMsg),
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Chat(_) => MessageKind::Chat,
            Message::Pose(_) => MessageKind::Pose,
            Message::Twist(_) => MessageKind::Twist,
            Message::Detections(_) => MessageKind::Detections,
            Message::Sensors(_) => MessageKind::Sensors,
            Message::NavStatus(_) => MessageKind::NavStatus,
            Message::Path(_) => MessageKind::Path,
            Message::Intent(_) => MessageKind::Intent,
            Message::ExecEvent(_) => MessageKind::ExecEvent,
            Message::Interaction(_) => MessageKind::Interaction,
            Message::Diag(_) => MessageKind::Diag,
        }
    }

    pub fn chat(text: impl Into<String>) -> Self {
        Message::Chat(ChatMessage::new(text))
    }

    pub fn as_chat(&self) -> Option<&ChatMessage> {
        match self {
            Message::Chat(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_twist(&self) -> Option<&Twist> {
        match self {
            Message::Twist(t) => Some(t),
            _ => None,
        }
    }

    /// JSON form of the payload alone, as sent in bridge frames.
    pub fn to_json(&self) -> Value {
        let res = match self {
            Message::Chat(m) => serde_json::to_value(m),
            Message::Pose(m) => serde_json::to_value(m),
            Message::Twist(m) => serde_json::to_value(m),
            Message::Detections(m) => serde_json::to_value(m),
            Message::Sensors(m) => serde_json::to_value(m),
            Message::NavStatus(m) => serde_json::to_value(m),
            Message::Path(m) => serde_json::to_value(m),
            Message::Intent(m) => serde_json::to_value(m),
            Message::ExecEvent(m) => serde_json::to_value(m),
            Message::Interaction(m) => serde_json::to_value(m),
            Message::Diag(m) => serde_json::to_value(m),
        };
        // All payload types are plain data with string keys.
        res.expect("payload serialization is infallible")
    }

    /// Parse a payload of the given kind.
    pub fn from_json(kind: MessageKind, value: Value) -> Result<Message, serde_json::Error> {
        Ok(match kind {
            MessageKind::Chat => Message::Chat(serde_json::from_value(value)?),
            MessageKind::Pose => Message::Pose(serde_json::from_value(value)?),
            MessageKind::Twist => Message::Twist(serde_json::from_value(value)?),
            MessageKind::Detections => Message::Detections(serde_json::from_value(value)?),
            MessageKind::Sensors => Message::Sensors(Box::new(serde_json::from_value(value)?)),
            MessageKind::NavStatus => Message::NavStatus(serde_json::from_value(value)?),
            MessageKind::Path => Message::Path(serde_json::from_value(value)?),
            MessageKind::Intent => Message::Intent(serde_json::from_value(value)?),
            MessageKind::ExecEvent => Message::ExecEvent(serde_json::from_value(value)?),
            MessageKind::Interaction => Message::Interaction(Box::new(serde_json::from_value(value)?)),
            MessageKind::Diag => Message::Diag(serde_json::from_value(value)?),
        })
    }
}

impl From<Twist> for Message {
    fn from(t: Twist) -> Self {
        Message::Twist(t)
    }
}

impl From<ChatMessage> for Message {
    fn from(m: ChatMessage) -> Self {
        Message::Chat(m)
    }
}

impl From<PoseMsg> for Message {
    fn from(m: PoseMsg) -> Self {
        Message::Pose(m)
    }
}
