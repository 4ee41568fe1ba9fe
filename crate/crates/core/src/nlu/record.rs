//! Interaction records and the append-only JSON-lines interaction log.
//!
//! One record per line:
//!
//! ```json
//! {"id":3,"input_text":"move forward","lm_output":"forward","predicted_label":"forward",
//!  "true_label":"forward","intent_kind":"motion_pattern",
//!  "stamps":{"gui_sent":1.0,"node_received":1.05,"action_started":1.05,"action_ended":3.05,"responded":null},
//!  "backend_latency":0.0,
//!  "outcome":{"nav_success":null,"nav_state":null,"final_pose_error":null,"detection_correct":null}}
//! ```
//!
//! `responded` is set for queries, which end with an answer instead of motion.
//! Perception frames may be logged as records with `intent_kind` `detection`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::msgbus::{Envelope, Message};
use crate::perception::ScoredDetection;
use crate::rem::{ExecEvent, ExecPhase, NavState, NavStatus};

pub const DETECTION_KIND: &str = "detection";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stamps {
    pub gui_sent: Option<f64>,
    pub node_received: Option<f64>,
    pub action_started: Option<f64>,
    pub action_ended: Option<f64>,
    #[serde(default)]
    pub responded: Option<f64>,
}

impl Stamps {
    /// Present stamps are non-decreasing in field order.
    pub fn ordered(&self) -> bool {
        let seq: Vec<f64> = [
            self.gui_sent,
            self.node_received,
            self.action_started,
            self.action_ended,
        ]
        .into_iter()
        .flatten()
        .collect();
        seq.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub nav_success: Option<bool>,
    #[serde(default)]
    pub nav_state: Option<NavState>,
    #[serde(default)]
    pub final_pose_error: Option<f64>,
    pub detection_correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub id: u64,
    pub input_text: String,
    pub lm_output: String,
    pub predicted_label: String,
    pub true_label: Option<String>,
    pub intent_kind: String,
    pub stamps: Stamps,
    #[serde(default)]
    pub backend_latency: Option<f64>,
    pub outcome: Outcome,
}

impl InteractionRecord {
    /// A perception-frame record for one detection.
    pub fn detection(id: u64, scored: &ScoredDetection) -> Self {
        Self {
            id,
            input_text: String::new(),
            lm_output: String::new(),
            predicted_label: scored.detection.label.clone(),
            true_label: None,
            intent_kind: DETECTION_KIND.into(),
            stamps: Stamps {
                action_started: Some(scored.detection.stamp),
                ..Default::default()
            },
            backend_latency: None,
            outcome: Outcome {
                detection_correct: Some(scored.correct),
                ..Default::default()
            },
        }
    }

    fn awaits_action(&self) -> bool {
        !matches!(self.intent_kind.as_str(), "query" | DETECTION_KIND)
    }

    fn apply_event(&mut self, ev: &ExecEvent) {
        match ev.phase {
            ExecPhase::Started => {
                self.stamps.action_started.get_or_insert(ev.stamp);
            }
            ExecPhase::Ended => {
                self.stamps.action_ended.get_or_insert(ev.stamp);
            }
        }
    }

    fn apply_nav(&mut self, ns: &NavStatus) {
        if ns.state.is_terminal() {
            self.outcome.nav_success = Some(ns.state == NavState::Succeeded);
            self.outcome.nav_state = Some(ns.state);
            self.outcome.final_pose_error = ns.final_pose_error;
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("interaction log I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("interaction log line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Collects records from the bus, merges execution events and navigation
/// outcomes by interaction id, and appends each finished record to a file.
#[derive(Default)]
pub struct InteractionLog {
    pending: BTreeMap<u64, InteractionRecord>,
    early_events: BTreeMap<u64, Vec<Message>>,
    finished: Vec<InteractionRecord>,
    writer: Option<BufWriter<File>>,
}

impl InteractionLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Append to `path`, creating it if needed.
    pub fn to_file(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            writer: Some(BufWriter::new(f)),
            ..Default::default()
        })
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.finished
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn ingest(&mut self, env: &Envelope) -> Result<(), LogError> {
        match &*env.payload {
            Message::Interaction(rec) => {
                let mut rec = (**rec).clone();
                for m in self.early_events.remove(&rec.id).unwrap_or_default() {
                    match &m {
                        Message::ExecEvent(ev) => rec.apply_event(ev),
                        Message::NavStatus(ns) => rec.apply_nav(ns),
                        _ => {}
                    }
                }
                let done = !rec.awaits_action() || rec.stamps.action_ended.is_some();
                let id = rec.id;
                self.pending.insert(id, rec);
                if done {
                    self.finish(id)?;
                }
            }
            Message::ExecEvent(ev) => {
                let Some(id) = ev.interaction else { return Ok(()) };
                match self.pending.get_mut(&id) {
                    Some(rec) => {
                        rec.apply_event(ev);
                        if ev.phase == ExecPhase::Ended {
                            self.finish(id)?;
                        }
                    }
                    None => self
                        .early_events
                        .entry(id)
                        .or_default()
                        .push(Message::ExecEvent(ev.clone())),
                }
            }
            Message::NavStatus(ns) => {
                let Some(id) = ns.interaction else { return Ok(()) };
                match self.pending.get_mut(&id) {
                    Some(rec) => rec.apply_nav(ns),
                    None => self
                        .early_events
                        .entry(id)
                        .or_default()
                        .push(Message::NavStatus(ns.clone())),
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn finish(&mut self, id: u64) -> Result<(), LogError> {
        if let Some(rec) = self.pending.remove(&id) {
            if let Some(w) = &mut self.writer {
                serde_json::to_writer(&mut *w, &rec).map_err(std::io::Error::from)?;
                w.write_all(b"\n")?;
                w.flush()?;
            }
            self.finished.push(rec);
        }
        Ok(())
    }

    /// Flush every record still waiting for an outcome and return them all.
    pub fn close(mut self) -> Result<Vec<InteractionRecord>, LogError> {
        let ids: Vec<u64> = self.pending.keys().copied().collect();
        for id in ids {
            self.finish(id)?;
        }
        Ok(self.finished)
    }
}

pub fn write_log(path: impl AsRef<Path>, records: &[InteractionRecord]) -> Result<(), LogError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<InteractionRecord>, LogError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| LogError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msgbus::Bus;
    use crate::rem::Branch;

    fn rec(id: u64, kind: &str) -> InteractionRecord {
        InteractionRecord {
            id,
            input_text: "x".into(),
            lm_output: "x".into(),
            predicted_label: "x".into(),
            true_label: None,
            intent_kind: kind.into(),
            stamps: Stamps {
                gui_sent: Some(1.0),
                node_received: Some(1.1),
                ..Default::default()
            },
            backend_latency: Some(0.0),
            outcome: Outcome::default(),
        }
    }

    fn ev(id: u64, phase: ExecPhase, stamp: f64) -> ExecEvent {
        ExecEvent {
            interaction: Some(id),
            phase,
            branch: Branch::NavGoal,
            stamp,
            detail: None,
        }
    }

    #[test]
    fn merges_events_in_any_order() {
        let bus = Bus::new();
        let mut log = InteractionLog::in_memory();
        let started = bus
            .publish("exec/events", Message::ExecEvent(ev(1, ExecPhase::Started, 1.2)))
            .unwrap();
        log.ingest(&started).unwrap();
        log.ingest(
            &bus.publish("log/interaction", Message::Interaction(Box::new(rec(1, "nav_goal"))))
                .unwrap(),
        )
        .unwrap();
        assert_eq!(log.pending_count(), 1);
        let ns = NavStatus {
            state: NavState::Succeeded,
            goal_label: "kitchen".into(),
            final_pose_error: Some(0.1),
            interaction: Some(1),
            stamp: 5.0,
        };
        log.ingest(&bus.publish("nav/status", Message::NavStatus(ns)).unwrap())
            .unwrap();
        log.ingest(
            &bus.publish("exec/events", Message::ExecEvent(ev(1, ExecPhase::Ended, 5.0)))
                .unwrap(),
        )
        .unwrap();
        let r = &log.records()[0];
        assert_eq!(r.stamps.action_started, Some(1.2));
        assert_eq!(r.stamps.action_ended, Some(5.0));
        assert_eq!(r.outcome.nav_success, Some(true));
        assert!(r.stamps.ordered());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let bus = Bus::new();
        let mut log = InteractionLog::to_file(&path).unwrap();
        log.ingest(
            &bus.publish("log/interaction", Message::Interaction(Box::new(rec(7, "query"))))
                .unwrap(),
        )
        .unwrap();
        log.ingest(
            &bus.publish("log/interaction", Message::Interaction(Box::new(rec(8, "stop"))))
                .unwrap(),
        )
        .unwrap();
        let all = log.close().unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(read_log(&path).unwrap(), all);
        std::fs::write(&path, "{\"id\":1}\n").unwrap();
        assert!(matches!(read_log(&path), Err(LogError::Parse { line: 1, .. })));
    }
}
