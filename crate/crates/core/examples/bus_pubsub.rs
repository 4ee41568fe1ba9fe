//! Topic-based publish/subscribe on a fake clock.
//!
//! `cargo run --example bus_pubsub`

use std::sync::Arc;

use convo_robot::msgbus::{topics, Bus, ChatMessage, FakeClock, Message};
use convo_robot::rem::Twist;

fn main() {
    let clock = FakeClock::new(0.0);
    let bus = Bus::with_clock(Arc::new(clock.clone()));

    let chat = bus.subscribe(topics::CHAT_IN).unwrap();
    let cmd = bus.subscribe(topics::CMD_VEL).unwrap();
    let cmd_latest_only = bus.subscribe(topics::CMD_VEL).unwrap();

    bus.publish(topics::CHAT_IN, ChatMessage::new("move forward")).unwrap();
    for i in 0..3 {
        clock.advance(0.05);
        bus.publish(topics::CMD_VEL, Twist::planar(0.1 * f64::from(i + 1), 0.0))
            .unwrap();
    }

    for env in chat.drain() {
        if let Message::Chat(m) = &*env.payload {
            println!("[{:.2}] {} #{}: {:?}", env.stamp, env.topic.as_str(), env.seq, m.text);
        }
    }
    for env in cmd.drain() {
        let t = env.payload.as_twist().unwrap();
        println!(
            "[{:.2}] {} #{}: v={:.1} w={:.1}",
            env.stamp,
            env.topic.as_str(),
            env.seq,
            t.v_x(),
            t.w_z()
        );
    }
    let last = cmd_latest_only.latest().unwrap();
    println!("a slow subscriber can skip to the latest command: seq {}", last.seq);

    // Publishing the wrong message type on a typed topic is refused.
    let err = bus.publish(topics::CMD_VEL, ChatMessage::new("oops")).unwrap_err();
    println!("rejected: {err}");
}
