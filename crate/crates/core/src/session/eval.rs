//! Scripted corpus evaluation.
//!
//! A corpus is JSON lines; `goal` adds a location named after the true
//! label before the run starts:
//!
//! ```json
//! {"text": "move forward", "true_label": "forward"}
//! {"text": "navigate to waypoint 3", "true_label": "waypoint_3", "goal": {"x": 4.0, "y": 6.5, "yaw": 0.0}}
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Scenario, Session, SessionError, SessionOptions};
use crate::metrics::{compute_report, MetricError, MetricsReport};
use crate::nlu::{InteractionLog, InteractionRecord};
use crate::rem::Location;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub text: String,
    pub true_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<GoalSpec>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus line {line}: {message}")]
    Line { line: usize, message: String },
}

/// Parse JSON lines, skipping blank lines; errors name the 1-based line.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: CorpusEntry = serde_json::from_str(line).map_err(|e| CorpusError::Line {
            line: i + 1,
            message: e.to_string(),
        })?;
        if entry.text.trim().is_empty() {
            return Err(CorpusError::Line {
                line: i + 1,
                message: "empty text".into(),
            });
        }
        if let Some(g) = entry.goal {
            if ![g.x, g.y, g.yaw].iter().all(|v| v.is_finite()) {
                return Err(CorpusError::Line {
                    line: i + 1,
                    message: "goal has a non-finite coordinate".into(),
                });
            }
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text)
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub records: Vec<InteractionRecord>,
    pub report: MetricsReport,
    /// Corpus lines whose action had not finished within the settle limit.
    pub unsettled: usize,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Feed every corpus line through a headless session, letting each action
/// finish before the next line is sent, then score the log.
pub fn run_eval(
    scenario: &Scenario,
    corpus: &[CorpusEntry],
    opts: SessionOptions,
    log: InteractionLog,
) -> Result<EvalOutcome, EvalError> {
    let mut scenario = scenario.clone();
    for e in corpus {
        if let Some(g) = e.goal {
            scenario
                .locations
                .insert(Location::from_yaw(&e.true_label, g.x, g.y, g.yaw));
        }
    }
    let settle = opts.exec.nav_timeout + 30.0;
    let mut session = Session::with_log(&scenario, opts, log)?;
    let mut unsettled = 0;
    for e in corpus {
        session.submit(&e.text, Some(&e.true_label))?;
        if !session.run_until_settled(settle)? {
            unsettled += 1;
        }
    }
    let records = session.finish()?;
    let report = compute_report(&records)?;
    Ok(EvalOutcome {
        records,
        report,
        unsettled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_errors_name_the_line() {
        let text = "{\"text\": \"stop\", \"true_label\": \"stop\"}\n\n{\"text\": 3}\n";
        match parse_corpus(text).unwrap_err() {
            CorpusError::Line { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn out_of_grammar_lines_lower_accuracy() {
        let corpus = parse_corpus(
            "{\"text\": \"turn left\", \"true_label\": \"left\"}\n\
             {\"text\": \"what do you see\", \"true_label\": \"visible_objects\"}\n\
             {\"text\": \"flibber the gizmo\", \"true_label\": \"right\"}\n\
             {\"text\": \"stop\", \"true_label\": \"stop\"}\n",
        )
        .unwrap();
        let opts = SessionOptions {
            log_detections: false,
            ..Default::default()
        };
        let out = run_eval(&Scenario::office(), &corpus, opts, InteractionLog::in_memory()).unwrap();
        assert_eq!(out.report.cra.value(), Some(0.75));
        assert_eq!(out.unsettled, 0);
    }
}
