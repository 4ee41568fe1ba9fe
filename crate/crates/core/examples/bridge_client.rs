//! A live session with the WebSocket bridge, driven by a minimal chat client.
//!
//! `cargo run --example bridge_client`

use std::net::TcpStream;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tungstenite::Message;

use convo_robot::session::{LiveOptions, LiveSession, Scenario};

fn main() {
    let opts = LiveOptions {
        bridge: Some("127.0.0.1:0".into()),
        ..Default::default()
    };
    let session = LiveSession::start(&Scenario::office(), opts).unwrap();
    let addr = session.bridge_addr().unwrap();

    let map: Value = serde_json::from_str(
        &ureq::get(&format!("http://{addr}/map"))
            .call()
            .unwrap()
            .body_mut()
            .read_to_string()
            .unwrap(),
    )
    .unwrap();
    println!(
        "map '{}': {}x{} cells at {} m",
        map["name"], map["width"], map["height"], map["resolution"]
    );

    let stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_millis(50))).unwrap();
    let (mut ws, _) = tungstenite::client(format!("ws://{addr}/"), stream).unwrap();

    for (line, listen) in [("move forward", 2.5), ("where are you", 0.5), ("stop", 0.5)] {
        println!("> {line}");
        let frame = json!({"topic": "chat/in", "payload": {"text": line}});
        ws.send(Message::text(frame.to_string())).unwrap();
        let until = Instant::now() + Duration::from_secs_f64(listen);
        let mut poses = 0;
        while Instant::now() < until {
            let Ok(Message::Text(t)) = ws.read() else { continue };
            let v: Value = serde_json::from_str(t.as_str()).unwrap();
            match v["topic"].as_str().unwrap() {
                "chat/out" => println!("  robot: {}", v["payload"]["text"].as_str().unwrap()),
                "pose" => poses += 1,
                "cmd_vel" if v["payload"]["linear"]["x"] == 0.0 && v["payload"]["angular"]["z"] == 0.0 => {
                    println!("  cmd_vel: zero")
                }
                _ => {}
            }
        }
        println!("  ({poses} pose updates)");
    }
    drop(ws);
    let summary = session.shutdown().unwrap();
    println!(
        "shut down with {} interactions logged, robot at ({:.2}, {:.2})",
        summary.records.len(),
        summary.final_pose.x,
        summary.final_pose.y
    );
}
