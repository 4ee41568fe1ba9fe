//! Decoding chat lines into intents against the command grammar.
//!
//! `cargo run --example decode_intents`

use convo_robot::nlu::{decode, normalize, RuleBackend};
use convo_robot::session::Scenario;

fn main() {
    let grammar = Scenario::office().grounded_grammar();
    let backend = RuleBackend::new(&grammar);
    for line in [
        "Move forward!",
        "please navigate to the kitchen",
        "take me to the conference room",
        "go to the moon",
        "could you spin around a bit",
        "Where are you?",
        "what do you see",
        "STOP",
        "sing me a song",
    ] {
        let d = decode(&normalize(line), &grammar, &backend);
        println!(
            "{line:32} -> {:15} {:16} (confidence {:.2}, backend said {:?})",
            d.intent.kind.name(),
            d.intent.matched_label,
            d.intent.confidence,
            d.lm_output
        );
    }
}
