//! A scripted conversation with the robot, printing the transcript and the
//! interaction log.
//!
//! `cargo run --example headless_chat`

use convo_robot::msgbus::{topics, Message};
use convo_robot::session::{Scenario, Session, SessionOptions};

fn main() {
    let opts = SessionOptions {
        log_detections: false,
        ..Default::default()
    };
    let mut session = Session::new(&Scenario::office(), opts).unwrap();
    let replies = session.bus().subscribe(topics::CHAT_OUT).unwrap();
    let script = [
        "where are you",
        "turn left",
        "what do you see",
        "move forward",
        "how far have you traveled",
        "rotate in place",
        "stop",
        "what are you doing",
        "sing me a song",
    ];
    for line in script {
        println!("you:   {line}");
        session.submit(line, None).unwrap();
        session.run_for(1.5).unwrap();
        for env in replies.drain() {
            if let Message::Chat(m) = &*env.payload {
                println!("robot: {}", m.text);
            }
        }
    }
    session.run_until_settled(30.0).unwrap();
    println!();
    let mut records = session.finish().unwrap();
    records.sort_by_key(|r| r.id);
    for r in records {
        let art = match (r.stamps.gui_sent, r.stamps.action_started.or(r.stamps.responded)) {
            (Some(a), Some(b)) => format!("{:.3}s", b - a),
            _ => "-".into(),
        };
        println!(
            "#{} {:28} {:15} {:16} response {art}",
            r.id, r.input_text, r.intent_kind, r.predicted_label
        );
    }
}
