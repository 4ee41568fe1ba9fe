//! Natural-language front end: normalization, grammar-driven intent
//! decoding with pluggable language-model backends, query answering and
//! interaction logging.

mod answer;
mod backend;
mod grammar;
mod http;
mod intent;
mod node;
mod record;
mod utterance;

pub use answer::{answer_query, QueryContext, DEFAULT_STALENESS};
pub use backend::{BudgetedBackend, Interpretation, LmBackend, RuleBackend, SimulatedLatency, DEFAULT_BUDGET};
pub use grammar::{
    decode, decode_with, Decoded, Destination, EntryKind, GrammarEntry, GrammarError, GrammarFile, GrammarViolation,
    IntentGrammar, DESTINATION_SLOT,
};
pub use http::{completion_text, parse_label, HttpBackend, HttpBackendConfig, DEFAULT_PROMPT};
pub use intent::{Intent, IntentKind, QueryKind, STOP_LABEL, UNKNOWN_LABEL};
pub use node::{acknowledgment, Handled, LlmNode};
pub use record::{read_log, write_log, InteractionLog, InteractionRecord, LogError, Outcome, Stamps, DETECTION_KIND};
pub use utterance::{normalize, tokenize, Utterance};
