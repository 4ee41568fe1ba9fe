use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Position,
    TravelDistance,
    VisibleObjects,
    Status,
}

impl QueryKind {
    pub const ALL: [QueryKind; 4] = [
        QueryKind::Position,
        QueryKind::TravelDistance,
        QueryKind::VisibleObjects,
        QueryKind::Status,
    ];

    pub fn label(self) -> &'static str {
        match self {
            QueryKind::Position => "position",
            QueryKind::TravelDistance => "travel_distance",
            QueryKind::VisibleObjects => "visible_objects",
            QueryKind::Status => "status",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.label() == label)
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IntentKind {
    /// `resolved` is false when the destination is not a registered location.
    NavGoal {
        destination: String,
        resolved: bool,
    },
    MotionPattern {
        pattern: String,
    },
    Query {
        query: QueryKind,
    },
    Stop,
    Unknown,
}

impl IntentKind {
    pub fn name(&self) -> &'static str {
        match self {
            IntentKind::NavGoal { .. } => "nav_goal",
            IntentKind::MotionPattern { .. } => "motion_pattern",
            IntentKind::Query { .. } => "query",
            IntentKind::Stop => "stop",
            IntentKind::Unknown => "unknown",
        }
    }
}

/// Decoded meaning of one utterance. `matched_label` is the classifier
/// output compared against corpus labels: the destination, pattern or query
/// name, or `stop` / `unknown`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intent {
    pub kind: IntentKind,
    pub confidence: f64,
    pub matched_label: String,
}

pub const UNKNOWN_LABEL: &str = "unknown";
pub const STOP_LABEL: &str = "stop";

impl Intent {
    pub fn unknown() -> Self {
        Self {
            kind: IntentKind::Unknown,
            confidence: 0.0,
            matched_label: UNKNOWN_LABEL.into(),
        }
    }

    pub fn stop(confidence: f64) -> Self {
        Self {
            kind: IntentKind::Stop,
            confidence,
            matched_label: STOP_LABEL.into(),
        }
    }

    pub fn motion(pattern: impl Into<String>, confidence: f64) -> Self {
        let pattern = pattern.into();
        Self {
            matched_label: pattern.clone(),
            kind: IntentKind::MotionPattern { pattern },
            confidence,
        }
    }

    pub fn nav(destination: impl Into<String>, resolved: bool, confidence: f64) -> Self {
        let destination = destination.into();
        Self {
            matched_label: destination.clone(),
            kind: IntentKind::NavGoal { destination, resolved },
            confidence,
        }
    }

    pub fn query(query: QueryKind, confidence: f64) -> Self {
        Self {
            kind: IntentKind::Query { query },
            confidence,
            matched_label: query.label().into(),
        }
    }

    pub fn is_query(&self) -> bool {
        matches!(self.kind, IntentKind::Query { .. })
    }
}
