//! Bridge wire protocol against a live session, as a chat client sees it.

use std::net::{SocketAddr, TcpStream};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tungstenite::{Message as WsMessage, WebSocket};

use convo_robot::msgbus::{bridge_serve, topics, Bus, ChatMessage};
use convo_robot::session::{LiveOptions, LiveSession, Scenario};

fn connect(addr: SocketAddr) -> WebSocket<TcpStream> {
    let stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_millis(50))).unwrap();
    let (ws, _) = tungstenite::client(format!("ws://{addr}/"), stream).unwrap();
    ws
}

fn send(ws: &mut WebSocket<TcpStream>, text: &str) {
    let frame = json!({"topic": "chat/in", "payload": {"text": text}});
    ws.send(WsMessage::text(frame.to_string())).unwrap();
}

/// Read frames until `want` matches one or the deadline passes.
fn read_until(ws: &mut WebSocket<TcpStream>, within: Duration, mut want: impl FnMut(&Value) -> bool) -> Option<Value> {
    let deadline = Instant::now() + within;
    while Instant::now() < deadline {
        match ws.read() {
            Ok(WsMessage::Text(t)) => {
                let v: Value = serde_json::from_str(t.as_str()).unwrap();
                if want(&v) {
                    return Some(v);
                }
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(e) => panic!("websocket: {e}"),
        }
    }
    None
}

fn is_zero_twist(payload: &Value) -> bool {
    ["linear", "angular"]
        .iter()
        .all(|k| ["x", "y", "z"].iter().all(|a| payload[k][a].as_f64() == Some(0.0)))
}

fn live() -> LiveSession {
    let opts = LiveOptions {
        bridge: Some("127.0.0.1:0".into()),
        ..Default::default()
    };
    LiveSession::start(&Scenario::office(), opts).unwrap()
}

#[test]
fn map_metadata_over_http() {
    let session = live();
    let addr = session.bridge_addr().unwrap();
    let body = ureq::get(&format!("http://{addr}/map"))
        .call()
        .unwrap()
        .body_mut()
        .read_to_string()
        .unwrap();
    let map: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(map["width"], 180);
    assert_eq!(map["height"], 200);
    assert_eq!(map["resolution"], 0.1);
    assert_eq!(map["cells"].as_array().unwrap().len(), 180 * 200);
    assert_eq!(map["name"], "office_18x20");
    session.shutdown().unwrap();
}

#[test]
fn chat_round_trip_and_stop_latency() {
    let session = live();
    let addr = session.bridge_addr().unwrap();
    let mut ws = connect(addr);
    assert!(session.bridge().unwrap().wait_for_clients(1, Duration::from_secs(2)));

    send(&mut ws, "move forward");
    let mut saw_pose = false;
    let ack = read_until(&mut ws, Duration::from_secs(3), |v| {
        saw_pose |= v["topic"] == topics::POSE;
        v["topic"] == topics::CHAT_OUT
    })
    .expect("acknowledgment bubble");
    assert!(
        ack["payload"]["text"]
            .as_str()
            .unwrap()
            .to_lowercase()
            .contains("forward"),
        "{ack}"
    );
    if !saw_pose {
        assert!(read_until(&mut ws, Duration::from_secs(2), |v| v["topic"] == topics::POSE).is_some());
    }
    assert!(read_until(&mut ws, Duration::from_secs(2), |v| {
        v["topic"] == topics::CMD_VEL && v["payload"]["linear"]["x"].as_f64().is_some_and(|x| x > 0.0)
    })
    .is_some());

    let clicked = Instant::now();
    send(&mut ws, "stop");
    let zero = read_until(&mut ws, Duration::from_secs(2), |v| {
        v["topic"] == topics::CMD_VEL && is_zero_twist(&v["payload"])
    });
    let latency = clicked.elapsed();
    assert!(zero.is_some(), "no zero Twist after stop");
    assert!(latency < Duration::from_millis(500), "stop took {latency:?}");

    drop(ws);
    let summary = session.shutdown().unwrap();
    assert!(summary.last_twist.is_some_and(|t| t.is_zero()));
    assert!(summary.records.iter().any(|r| r.predicted_label == "stop"));
}

#[test]
fn bad_frames_get_errors_and_keep_the_connection() {
    let session = live();
    let mut ws = connect(session.bridge_addr().unwrap());
    ws.send(WsMessage::text("not json")).unwrap();
    let err = read_until(&mut ws, Duration::from_secs(2), |v| v["topic"] == "error").unwrap();
    assert!(err["payload"]["message"].as_str().unwrap().contains("JSON"));
    ws.send(WsMessage::text(json!({"topic": "cmd_vel", "payload": {}}).to_string()))
        .unwrap();
    assert!(read_until(&mut ws, Duration::from_secs(2), |v| v["topic"] == "error").is_some());
    send(&mut ws, "where are you");
    let reply = read_until(&mut ws, Duration::from_secs(3), |v| v["topic"] == topics::CHAT_OUT).unwrap();
    assert!(reply["payload"]["text"].as_str().unwrap().contains("x="), "{reply}");
    session.shutdown().unwrap();
}

#[test]
fn hundred_robot_messages_arrive_in_order() {
    let bus = Bus::new();
    let bridge = bridge_serve(&bus, 0, &[topics::CHAT_OUT]).unwrap();
    let mut ws = connect(bridge.local_addr());
    assert!(bridge.wait_for_clients(1, Duration::from_secs(2)));
    for i in 0..100 {
        bus.publish(topics::CHAT_OUT, ChatMessage::new(format!("reply {i}")))
            .unwrap();
    }
    let mut got = Vec::new();
    read_until(&mut ws, Duration::from_secs(5), |v| {
        got.push(v["payload"]["text"].as_str().unwrap().to_string());
        got.len() == 100
    });
    let want: Vec<String> = (0..100).map(|i| format!("reply {i}")).collect();
    assert_eq!(got, want);
    bridge.shutdown();
}
