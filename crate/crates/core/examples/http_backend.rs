//! Plugging in a language model over HTTP. A tiny local endpoint stands in
//! for the model and classifies with a lookup table.
//!
//! `cargo run --example http_backend`

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use serde_json::{json, Value};

use convo_robot::nlu::HttpBackendConfig;
use convo_robot::session::{BackendChoice, Scenario, Session, SessionOptions};

fn fake_model(prompt: &str) -> &'static str {
    let command = prompt.rsplit("Command:").next().unwrap_or("").to_lowercase();
    if command.contains("coffee") || command.contains("hungry") {
        "kitchen"
    } else if command.contains("loop") {
        "circle"
    } else {
        "I am not sure"
    }
}

fn serve(listener: TcpListener) {
    for stream in listener.incoming() {
        let stream = stream.unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut len = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line.trim().is_empty() {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
        }
        let mut body = vec![0; len];
        reader.read_exact(&mut body).unwrap();
        let req: Value = serde_json::from_slice(&body).unwrap();
        let reply = json!({"choices": [{"text": fake_model(req["prompt"].as_str().unwrap())}]}).to_string();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
            reply.len()
        )
        .unwrap();
    }
}

fn main() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    thread::spawn(move || serve(listener));

    let scenario = Scenario::office().with_backend(BackendChoice::Http(HttpBackendConfig::new(url)));
    let opts = SessionOptions {
        log_detections: false,
        ..Default::default()
    };
    let mut session = Session::new(&scenario, opts).unwrap();
    for line in [
        "I could really use a coffee",
        "trace a loop",
        "move forward",
        "recite a poem",
    ] {
        session.submit(line, None).unwrap();
        session.run_until_settled(150.0).unwrap();
    }
    for r in session.finish().unwrap() {
        println!(
            "{:30} model said {:18} -> {:14} ({})",
            r.input_text,
            format!("{:?}", r.lm_output),
            r.predicted_label,
            r.intent_kind
        );
    }
}
