use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::grammar::{EntryKind, IntentGrammar};
use super::intent::{STOP_LABEL, UNKNOWN_LABEL};
use super::utterance::{contains_run, Utterance};
use crate::msgbus::FakeClock;

/// Default time budget for one backend call.
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(5);

/// A backend's reading of an utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    pub label: String,
    pub confidence: f64,
    /// What the backend actually produced, for the interaction log.
    pub raw: String,
}

impl Interpretation {
    pub fn new(label: impl Into<String>, confidence: f64) -> Self {
        let label = label.into();
        Self {
            raw: label.clone(),
            label,
            confidence,
        }
    }

    pub fn unknown(raw: impl Into<String>) -> Self {
        Self {
            label: UNKNOWN_LABEL.into(),
            confidence: 0.0,
            raw: raw.into(),
        }
    }

    pub fn is_unknown(&self) -> bool {
        self.label == UNKNOWN_LABEL
    }
}

/// Language-model interpretation step. Must always return; `unknown` is a
/// valid answer.
pub trait LmBackend: Send + Sync {
    fn name(&self) -> &str;
    fn interpret(&self, utt: &Utterance) -> Interpretation;
}

const NAV_CONFIDENCE: f64 = 0.8;
const KEYWORD_CONFIDENCE: f64 = 0.7;

/// Offline keyword-spotting backend built from the grammar's synonyms.
pub struct RuleBackend {
    grammar: IntentGrammar,
}

impl RuleBackend {
    pub fn new(grammar: &IntentGrammar) -> Self {
        Self {
            grammar: grammar.clone(),
        }
    }
}

impl LmBackend for RuleBackend {
    fn name(&self) -> &str {
        "rule"
    }

    fn interpret(&self, utt: &Utterance) -> Interpretation {
        let tokens = &utt.tokens;
        let entries = self.grammar.entries();
        let has_nav_verb = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == EntryKind::Navigate)
            .any(|(i, _)| self.grammar.synonyms(i).iter().any(|s| contains_run(tokens, s)));
        if has_nav_verb {
            if let Some(dest) = self.grammar.find_destination(tokens) {
                return Interpretation::new(dest, NAV_CONFIDENCE);
            }
        }
        let mut best: Option<(usize, usize)> = None;
        for (i, e) in entries.iter().enumerate() {
            if e.kind == EntryKind::Navigate {
                continue;
            }
            let longest = self
                .grammar
                .synonyms(i)
                .iter()
                .chain(self.grammar.slotless_patterns(i))
                .filter(|s| contains_run(tokens, s))
                .map(Vec::len)
                .max();
            if let Some(n) = longest {
                if best.is_none_or(|b| n > b.1) {
                    best = Some((i, n));
                }
            }
        }
        match best {
            Some((i, _)) => {
                let e = &entries[i];
                let label = if e.kind == EntryKind::Stop {
                    STOP_LABEL
                } else {
                    &e.label
                };
                Interpretation::new(label, KEYWORD_CONFIDENCE)
            }
            None => Interpretation::unknown(UNKNOWN_LABEL),
        }
    }
}

/// Runs the inner backend on a worker thread and gives up after `budget`.
pub struct BudgetedBackend {
    inner: Arc<dyn LmBackend>,
    budget: Duration,
}

impl BudgetedBackend {
    pub fn new(inner: Arc<dyn LmBackend>, budget: Duration) -> Self {
        Self { inner, budget }
    }
}

impl LmBackend for BudgetedBackend {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn interpret(&self, utt: &Utterance) -> Interpretation {
        let (tx, rx) = mpsc::channel();
        let inner = self.inner.clone();
        let utt = utt.clone();
        thread::spawn(move || {
            let _ = tx.send(inner.interpret(&utt));
        });
        match rx.recv_timeout(self.budget) {
            Ok(i) => i,
            Err(_) => {
                log::warn!("{} backend exceeded its {:?} budget", self.inner.name(), self.budget);
                Interpretation::unknown("<timeout>")
            }
        }
    }
}

/// Test double: advances a fake clock by a fixed latency on every call,
/// emulating a slow model without real waiting.
pub struct SimulatedLatency {
    inner: Arc<dyn LmBackend>,
    clock: FakeClock,
    latency: f64,
}

impl SimulatedLatency {
    pub fn new(inner: Arc<dyn LmBackend>, clock: FakeClock, latency: f64) -> Self {
        Self { inner, clock, latency }
    }
}

impl LmBackend for SimulatedLatency {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn interpret(&self, utt: &Utterance) -> Interpretation {
        self.clock.advance(self.latency);
        self.inner.interpret(utt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sleepy;
    impl LmBackend for Sleepy {
        fn name(&self) -> &str {
            "sleepy"
        }
        fn interpret(&self, _: &Utterance) -> Interpretation {
            thread::sleep(Duration::from_millis(500));
            Interpretation::new("forward", 1.0)
        }
    }

    #[test]
    fn budget_turns_slow_calls_into_unknown() {
        let b = BudgetedBackend::new(Arc::new(Sleepy), Duration::from_millis(20));
        let out = b.interpret(&Utterance::new("go", 0.0));
        assert!(out.is_unknown());
        assert_eq!(out.confidence, 0.0);
    }

    #[test]
    fn simulated_latency_advances_clock() {
        let clock = FakeClock::new(10.0);
        let b = SimulatedLatency::new(Arc::new(Instant), clock.clone(), 0.05);
        b.interpret(&Utterance::new("x", 0.0));
        assert!((crate::msgbus::Clock::now(&clock) - 10.05).abs() < 1e-9);
    }

    struct Instant;
    impl LmBackend for Instant {
        fn name(&self) -> &str {
            "instant"
        }
        fn interpret(&self, _: &Utterance) -> Interpretation {
            Interpretation::unknown("")
        }
    }
}
