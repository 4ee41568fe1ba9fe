//! Goal navigation end to end: a chat command, planning, path following
//! and the final status, on the deterministic headless session.
//!
//! `cargo run --example navigate -- "take me to the lounge"`

use convo_robot::msgbus::{topics, Message};
use convo_robot::session::{Scenario, Session, SessionOptions};

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "go to the professor office".into());
    let mut session = Session::new(&Scenario::office(), SessionOptions::default()).unwrap();
    let status = session.bus().subscribe(topics::NAV_STATUS).unwrap();
    let replies = session.bus().subscribe(topics::CHAT_OUT).unwrap();
    let t0 = session.now();

    session.submit(&text, None).unwrap();
    let mut next_print = 0.0;
    while !session.executor().is_idle() && session.now() - t0 < 180.0 {
        session.step().unwrap();
        if session.now() - t0 >= next_print {
            let p = session.pose();
            println!(
                "t={:5.1}s  ({:5.2}, {:5.2}, {:5.2})",
                session.now() - t0,
                p.x,
                p.y,
                p.theta
            );
            next_print += 2.0;
        }
    }
    session.run_for(0.5).unwrap();
    for env in replies.drain() {
        if let Message::Chat(m) = &*env.payload {
            println!("robot: {}", m.text);
        }
    }
    if let Some(Message::NavStatus(s)) = status.drain().last().map(|e| (*e.payload).clone()) {
        println!("{:?} at {} (error {:?})", s.state, s.goal_label, s.final_pose_error);
    }
}
