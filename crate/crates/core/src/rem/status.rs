use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavState {
    Pending,
    Active,
    Succeeded,
    Aborted,
    TimedOut,
}

impl NavState {
    pub fn is_terminal(self) -> bool {
        matches!(self, NavState::Succeeded | NavState::Aborted | NavState::TimedOut)
    }
}

/// Progress of a navigation goal, published on `nav/status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavStatus {
    pub state: NavState,
    pub goal_label: String,
    /// Distance to the goal when the state became terminal.
    pub final_pose_error: Option<f64>,
    pub interaction: Option<u64>,
    pub stamp: f64,
}

/// Which dispatch branch handled an intent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    NavGoal,
    MotionPattern,
    Query,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecPhase {
    Started,
    Ended,
}

/// Start and end of an executed action, published on `exec/events`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecEvent {
    pub interaction: Option<u64>,
    pub phase: ExecPhase,
    pub branch: Branch,
    pub stamp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}
