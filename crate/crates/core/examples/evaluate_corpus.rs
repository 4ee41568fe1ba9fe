//! Scripted evaluation: a labeled corpus through the full pipeline, scored
//! into a metrics report with a confusion matrix.
//!
//! `cargo run --example evaluate_corpus`

use convo_robot::nlu::InteractionLog;
use convo_robot::session::{parse_corpus, run_eval, Scenario, SessionOptions};

const CORPUS: &str = r#"
{"text": "move forward", "true_label": "forward"}
{"text": "turn right", "true_label": "right"}
{"text": "go to the kitchen", "true_label": "kitchen"}
{"text": "head to waypoint a", "true_label": "waypoint_a", "goal": {"x": 12.0, "y": 2.5, "yaw": 1.57}}
{"text": "what can you see", "true_label": "visible_objects"}
{"text": "where are you now", "true_label": "position"}
{"text": "could you go backwards please", "true_label": "backward"}
{"text": "do the hokey cokey", "true_label": "circle"}
{"text": "halt", "true_label": "stop"}
"#;

fn main() {
    let corpus = parse_corpus(CORPUS).unwrap();
    let opts = SessionOptions {
        pipeline_delay: 0.02,
        perception_sigma: 0.8,
        ..Default::default()
    };
    let out = run_eval(&Scenario::office(), &corpus, opts, InteractionLog::in_memory()).unwrap();
    println!("{}", out.report.to_json());
    println!("{}", out.report.confusion.to_csv());
}
