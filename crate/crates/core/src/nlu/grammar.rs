//! Intent grammar: the table of command phrases the decoder matches against.
//!
//! ```toml
//! [[entries]]
//! label = "forward"
//! kind = "motion"               # motion | navigate | query | stop
//! patterns = ["move forward", "go forward"]
//! synonyms = ["ahead"]          # keywords for the rule backend
//!
//! [[entries]]
//! label = "navigate"
//! kind = "navigate"
//! patterns = ["navigate to {destination}", "go to the {destination}"]
//! synonyms = ["navigate", "go to", "take me"]
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::backend::{Interpretation, LmBackend};
use super::intent::{Intent, QueryKind, UNKNOWN_LABEL};
use super::utterance::{contains_run, tokenize, Utterance};

pub const DESTINATION_SLOT: &str = "{destination}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Motion,
    Navigate,
    Query,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarEntry {
    pub label: String,
    pub kind: EntryKind,
    #[serde(default)]
    pub patterns: Vec<String>,
    #[serde(default)]
    pub synonyms: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GrammarFile {
    #[serde(default)]
    pub entries: Vec<GrammarEntry>,
}

/// A navigation target the destination slot can resolve to.
#[derive(Debug, Clone, PartialEq)]
pub struct Destination {
    pub label: String,
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GrammarViolation {
    EmptyLabel {
        index: usize,
    },
    DuplicateLabel(String),
    BadPattern {
        label: String,
        pattern: String,
        reason: String,
    },
    UnknownQuery(String),
    NoPatterns(String),
}

impl fmt::Display for GrammarViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrammarViolation::EmptyLabel { index } => write!(f, "entry #{index} has an empty label"),
            GrammarViolation::DuplicateLabel(l) => write!(f, "label '{l}' is defined more than once"),
            GrammarViolation::BadPattern { label, pattern, reason } => {
                write!(f, "entry '{label}': pattern \"{pattern}\" {reason}")
            }
            GrammarViolation::UnknownQuery(l) => write!(
                f,
                "query entry '{l}' is not one of position, travel_distance, visible_objects, status"
            ),
            GrammarViolation::NoPatterns(l) => write!(f, "entry '{l}' has no patterns or synonyms"),
        }
    }
}

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("cannot read grammar file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse grammar: {0}")]
    Parse(String),
    #[error("invalid grammar: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<GrammarViolation>),
}

#[derive(Debug, Clone, PartialEq)]
struct Compiled {
    prefix: Vec<String>,
    /// Tokens after the destination slot; `None` for slotless patterns.
    suffix: Option<Vec<String>>,
}

fn compile(pattern: &str) -> Result<Compiled, String> {
    let mut prefix = Vec::new();
    let mut suffix: Option<Vec<String>> = None;
    for word in pattern.split_whitespace() {
        if word.contains('{') || word.contains('}') {
            if word != DESTINATION_SLOT {
                return Err(format!("has unsupported slot '{word}'"));
            }
            if suffix.is_some() {
                return Err("has more than one slot".into());
            }
            suffix = Some(Vec::new());
            continue;
        }
        let target = suffix.as_mut().unwrap_or(&mut prefix);
        target.extend(tokenize(word));
    }
    if prefix.is_empty() && suffix.as_ref().is_none_or(|s| s.is_empty()) {
        return Err("is empty".into());
    }
    Ok(Compiled { prefix, suffix })
}

/// Validated grammar plus the destination vocabulary for the slot.
#[derive(Debug, Clone)]
pub struct IntentGrammar {
    entries: Vec<GrammarEntry>,
    compiled: Vec<Vec<Compiled>>,
    synonyms: Vec<Vec<Vec<String>>>,
    destinations: Vec<(String, Vec<Vec<String>>)>,
}

impl IntentGrammar {
    pub fn new(file: GrammarFile) -> Result<Self, Vec<GrammarViolation>> {
        let mut violations = Vec::new();
        let mut seen = BTreeSet::new();
        let mut compiled = Vec::new();
        let mut synonyms = Vec::new();
        for (index, e) in file.entries.iter().enumerate() {
            if e.label.trim().is_empty() {
                violations.push(GrammarViolation::EmptyLabel { index });
            }
            if !seen.insert(e.label.clone()) {
                violations.push(GrammarViolation::DuplicateLabel(e.label.clone()));
            }
            if e.kind == EntryKind::Query && QueryKind::from_label(&e.label).is_none() {
                violations.push(GrammarViolation::UnknownQuery(e.label.clone()));
            }
            if e.patterns.is_empty() && e.synonyms.is_empty() {
                violations.push(GrammarViolation::NoPatterns(e.label.clone()));
            }
            let mut pats = Vec::new();
            for p in &e.patterns {
                match compile(p) {
                    Ok(c) if c.suffix.is_some() && e.kind != EntryKind::Navigate => {
                        violations.push(GrammarViolation::BadPattern {
                            label: e.label.clone(),
                            pattern: p.clone(),
                            reason: "uses the destination slot outside a navigate entry".into(),
                        })
                    }
                    Ok(c) if c.suffix.is_none() && e.kind == EntryKind::Navigate => {
                        violations.push(GrammarViolation::BadPattern {
                            label: e.label.clone(),
                            pattern: p.clone(),
                            reason: "lacks the {destination} slot".into(),
                        })
                    }
                    Ok(c) => pats.push(c),
                    Err(reason) => violations.push(GrammarViolation::BadPattern {
                        label: e.label.clone(),
                        pattern: p.clone(),
                        reason,
                    }),
                }
            }
            compiled.push(pats);
            synonyms.push(
                e.synonyms
                    .iter()
                    .map(|s| tokenize(s))
                    .filter(|t| !t.is_empty())
                    .collect(),
            );
        }
        if !violations.is_empty() {
            return Err(violations);
        }
        Ok(Self {
            entries: file.entries,
            compiled,
            synonyms,
            destinations: Vec::new(),
        })
    }

    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let file: GrammarFile = toml::from_str(text).map_err(|e| GrammarError::Parse(e.to_string()))?;
        Self::new(file).map_err(GrammarError::Invalid)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GrammarError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GrammarError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Set the locations the destination slot resolves against. Each label
    /// also matches with underscores read as spaces.
    pub fn with_destinations(mut self, destinations: impl IntoIterator<Item = Destination>) -> Self {
        self.destinations = destinations
            .into_iter()
            .map(|d| {
                let mut forms: Vec<Vec<String>> = vec![tokenize(&d.label)];
                forms.extend(d.aliases.iter().map(|a| tokenize(a)));
                forms.retain(|f| !f.is_empty());
                forms.sort_by_key(|f| std::cmp::Reverse(f.len()));
                forms.dedup();
                (d.label, forms)
            })
            .collect();
        self
    }

    pub fn entries(&self) -> &[GrammarEntry] {
        &self.entries
    }

    pub fn destination_labels(&self) -> Vec<String> {
        self.destinations.iter().map(|d| d.0.clone()).collect()
    }

    pub fn motion_labels(&self) -> Vec<String> {
        self.labels_of(EntryKind::Motion)
    }

    fn labels_of(&self, kind: EntryKind) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.label.clone())
            .collect()
    }

    /// Every label a decoder may emit (used to constrain external backends).
    pub fn output_labels(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .entries
            .iter()
            .filter(|e| e.kind != EntryKind::Navigate)
            .map(|e| {
                if e.kind == EntryKind::Stop {
                    super::intent::STOP_LABEL.to_string()
                } else {
                    e.label.clone()
                }
            })
            .collect();
        out.extend(self.destination_labels());
        out.push(UNKNOWN_LABEL.into());
        out.dedup();
        out
    }

    fn entry_intent(&self, i: usize, confidence: f64) -> Intent {
        let e = &self.entries[i];
        match e.kind {
            EntryKind::Motion => Intent::motion(&e.label, confidence),
            EntryKind::Query => Intent::query(
                QueryKind::from_label(&e.label).expect("query labels validated"),
                confidence,
            ),
            EntryKind::Stop => Intent::stop(confidence),
            EntryKind::Navigate => Intent::unknown(),
        }
    }

    /// Destination label whose form occurs as a run in `tokens`, longest form first.
    pub(crate) fn find_destination(&self, tokens: &[String]) -> Option<&str> {
        let mut best: Option<(&str, usize)> = None;
        for (label, forms) in &self.destinations {
            for f in forms {
                if contains_run(tokens, f) && best.is_none_or(|b| f.len() > b.1) {
                    best = Some((label, f.len()));
                }
            }
        }
        best.map(|b| b.0)
    }

    fn resolve_slot(&self, slot: &[String]) -> Option<Intent> {
        let trimmed = match slot.first().map(String::as_str) {
            Some("the" | "a" | "an" | "my") => &slot[1..],
            _ => slot,
        };
        if trimmed.is_empty() {
            return None;
        }
        for (label, forms) in &self.destinations {
            if forms.iter().any(|f| f == trimmed || f == slot) {
                return Some(Intent::nav(label.clone(), true, 1.0));
            }
        }
        Some(Intent::nav(trimmed.join("_"), false, 1.0))
    }

    /// Whole-utterance match against slotless patterns.
    pub fn match_exact(&self, tokens: &[String]) -> Option<Intent> {
        if tokens.is_empty() {
            return None;
        }
        self.compiled.iter().enumerate().find_map(|(i, pats)| {
            pats.iter()
                .any(|p| p.suffix.is_none() && p.prefix == tokens)
                .then(|| self.entry_intent(i, 1.0))
        })
    }

    /// Match against destination-slot patterns.
    pub fn match_slot(&self, tokens: &[String]) -> Option<Intent> {
        let mut unresolved = None;
        for pats in &self.compiled {
            for p in pats {
                let Some(suffix) = &p.suffix else { continue };
                if tokens.len() <= p.prefix.len() + suffix.len()
                    || !tokens.starts_with(&p.prefix)
                    || !tokens.ends_with(suffix)
                {
                    continue;
                }
                let slot = &tokens[p.prefix.len()..tokens.len() - suffix.len()];
                match self.resolve_slot(slot) {
                    Some(intent) if matches!(intent.kind, super::IntentKind::NavGoal { resolved: true, .. }) => {
                        return Some(intent)
                    }
                    Some(intent) => {
                        unresolved.get_or_insert(intent);
                    }
                    None => {}
                }
            }
        }
        unresolved
    }

    /// Map a backend candidate label (or phrase) onto the grammar.
    pub fn match_candidate(&self, candidate: &Interpretation) -> Option<Intent> {
        let label = candidate.label.trim();
        if label.is_empty() || label == UNKNOWN_LABEL {
            return None;
        }
        let c = candidate.confidence.clamp(0.0, 1.0);
        if let Some(i) = self.entries.iter().position(|e| {
            e.kind != EntryKind::Navigate
                && (e.label == label || (e.kind == EntryKind::Stop && label == super::intent::STOP_LABEL))
        }) {
            return Some(self.entry_intent(i, c));
        }
        if let Some((l, _)) = self.destinations.iter().find(|d| d.0 == label) {
            return Some(Intent::nav(l.clone(), true, c));
        }
        let tokens = tokenize(label);
        let by_phrase = self
            .match_exact(&tokens)
            .or_else(|| self.match_slot(&tokens))
            .or_else(|| {
                self.destinations
                    .iter()
                    .find(|(_, forms)| forms.contains(&tokens))
                    .map(|(l, _)| Intent::nav(l.clone(), true, c))
            })?;
        Some(Intent {
            confidence: c,
            ..by_phrase
        })
    }

    pub(crate) fn synonyms(&self, i: usize) -> &[Vec<String>] {
        &self.synonyms[i]
    }

    pub(crate) fn slotless_patterns(&self, i: usize) -> impl Iterator<Item = &Vec<String>> {
        self.compiled[i]
            .iter()
            .filter(|p| p.suffix.is_none())
            .map(|p| &p.prefix)
    }
}

/// Result of decoding one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub intent: Intent,
    pub lm_output: String,
}

/// Decode in fixed order: exact phrase, slot pattern, backend candidate,
/// else unknown. The backend is always consulted so its output is logged.
pub fn decode(utt: &Utterance, grammar: &IntentGrammar, backend: &dyn LmBackend) -> Decoded {
    let candidate = backend.interpret(utt);
    decode_with(utt, grammar, &candidate)
}

pub fn decode_with(utt: &Utterance, grammar: &IntentGrammar, candidate: &Interpretation) -> Decoded {
    let intent = grammar
        .match_exact(&utt.tokens)
        .or_else(|| grammar.match_slot(&utt.tokens))
        .or_else(|| grammar.match_candidate(candidate))
        .unwrap_or_else(Intent::unknown);
    Decoded {
        intent,
        lm_output: candidate.raw.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlu::{IntentKind, RuleBackend};

    fn grammar() -> IntentGrammar {
        IntentGrammar::parse(crate::assets::GRAMMAR)
            .unwrap()
            .with_destinations([
                Destination {
                    label: "secretary_office".into(),
                    aliases: vec!["secretarys office".into()],
                },
                Destination {
                    label: "kitchen".into(),
                    aliases: vec![],
                },
            ])
    }

    fn run(text: &str) -> Intent {
        let g = grammar();
        let b = RuleBackend::new(&g);
        decode(&Utterance::new(text, 0.0), &g, &b).intent
    }

    #[test]
    fn reference_commands() {
        assert_eq!(run("move forward"), Intent::motion("forward", 1.0));
        assert_eq!(
            run("navigate to the Secretary's office"),
            Intent::nav("secretary_office", true, 1.0)
        );
        assert_eq!(run("blorp fizzle"), Intent::unknown());
        assert_eq!(run("move in a circular pattern"), Intent::motion("circle", 1.0));
        assert_eq!(
            run("where are you").kind,
            IntentKind::Query {
                query: QueryKind::Position
            }
        );
        assert_eq!(run("stop").kind, IntentKind::Stop);
    }

    #[test]
    fn unresolved_destination_is_flagged() {
        let i = run("navigate to the moon base");
        assert_eq!(
            i.kind,
            IntentKind::NavGoal {
                destination: "moon_base".into(),
                resolved: false
            }
        );
    }

    #[test]
    fn backend_fallback_has_backend_confidence() {
        let i = run("could you please head over to the kitchen");
        assert!(matches!(i.kind, IntentKind::NavGoal { ref destination, resolved: true } if destination == "kitchen"));
        assert!(i.confidence < 1.0 && i.confidence > 0.0);
    }

    #[test]
    fn invalid_grammars_report_every_problem() {
        let text = r#"
[[entries]]
label = "a"
kind = "motion"
patterns = ["go {where}"]
[[entries]]
label = "a"
kind = "query"
patterns = ["huh"]
[[entries]]
label = "nav"
kind = "navigate"
patterns = ["go somewhere"]
"#;
        match IntentGrammar::parse(text).unwrap_err() {
            GrammarError::Invalid(v) => assert_eq!(v.len(), 4, "{v:?}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn decode_is_deterministic() {
        for t in ["turn left", "where are you", "go to kitchen", "xyz"] {
            assert_eq!(run(t), run(t));
        }
    }
}
