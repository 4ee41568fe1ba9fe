//! Network bridge exposing bus topics to external chat clients.
//!
//! Clients hold a WebSocket connection. Every envelope on an exposed topic is
//! forwarded to every connected client as one text frame:
//!
//! ```text
//! {"topic": "pose", "stamp": 1700000000.05, "seq": 12, "payload": {...}}
//! ```
//!
//! Clients send `{"topic": "chat/in", "payload": {"text": "move forward"}}`
//! (a top-level `"text"` is accepted too). Anything else earns an error frame
//! with topic `"error"`; the connection stays open. A plain `GET /map` on the
//! same port returns the static map metadata as JSON.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use thiserror::Error;
use tungstenite::protocol::WebSocket;

use super::bus::{Bus, Envelope};
use super::message::{topics, ChatMessage, Message};

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("cannot bind bridge to {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: io::Error,
    },
    #[error("bridge setup failed: {0}")]
    Setup(String),
}

/// Serialize an envelope into a bridge frame.
pub fn envelope_frame(env: &Envelope) -> Value {
    json!({
        "topic": env.topic.as_str(),
        "stamp": env.stamp,
        "seq": env.seq,
        "payload": env.payload.to_json(),
    })
}

fn error_frame(stamp: f64, message: &str) -> String {
    json!({"topic": "error", "stamp": stamp, "seq": 0, "payload": {"message": message}}).to_string()
}

/// Parse a client frame into the chat message to publish on `chat/in`.
pub fn parse_client_frame(text: &str) -> Result<ChatMessage, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("frame must be a JSON object")?;
    let topic = obj
        .get("topic")
        .and_then(Value::as_str)
        .ok_or("frame is missing a string 'topic'")?;
    if topic != topics::CHAT_IN {
        return Err(format!(
            "clients may only publish to '{}', not '{topic}'",
            topics::CHAT_IN
        ));
    }
    let mut msg: ChatMessage = match (obj.get("payload"), obj.get("text")) {
        (Some(payload), _) => {
            serde_json::from_value(payload.clone()).map_err(|e| format!("invalid chat payload: {e}"))?
        }
        (None, Some(Value::String(text))) => ChatMessage::new(text.clone()),
        _ => return Err("frame has neither 'payload' nor 'text'".into()),
    };
    if msg.sent.is_none() {
        msg.sent = obj.get("stamp").and_then(Value::as_f64);
    }
    Ok(msg)
}

struct ClientSlot {
    id: u64,
    tx: Sender<String>,
}

type Clients = Arc<Mutex<Vec<ClientSlot>>>;

/// Options for [`bridge_serve_with`].
#[derive(Debug, Clone)]
pub struct BridgeOptions {
    pub bind: String,
    pub exposed: Vec<String>,
    /// Served on `GET /map`.
    pub map: Option<Value>,
}

/// A running bridge. Dropping it stops all bridge threads.
pub struct BridgeHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    clients: Clients,
    threads: Vec<JoinHandle<()>>,
}

impl BridgeHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn client_count(&self) -> usize {
        self.clients.lock().unwrap().len()
    }

    /// Block until at least `n` clients are connected or the timeout passes.
    pub fn wait_for_clients(&self, n: usize, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        while Instant::now() < deadline {
            if self.client_count() >= n {
                return true;
            }
            thread::sleep(Duration::from_millis(5));
        }
        self.client_count() >= n
    }

    pub fn shutdown(mut self) {
        self.stop_threads();
    }

    fn stop_threads(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for BridgeHandle {
    fn drop(&mut self) {
        self.stop_threads();
    }
}

/// Serve the bridge on `port` (0 picks a free port) on all interfaces.
pub fn bridge_serve(bus: &Bus, port: u16, exposed: &[&str]) -> Result<BridgeHandle, BridgeError> {
    bridge_serve_with(
        bus,
        BridgeOptions {
            bind: format!("0.0.0.0:{port}"),
            exposed: exposed.iter().map(|s| s.to_string()).collect(),
            map: None,
        },
    )
}

pub fn bridge_serve_with(bus: &Bus, opts: BridgeOptions) -> Result<BridgeHandle, BridgeError> {
    let listener = TcpListener::bind(&opts.bind).map_err(|source| BridgeError::Bind {
        addr: opts.bind.clone(),
        source,
    })?;
    let addr = listener.local_addr().map_err(|e| BridgeError::Setup(e.to_string()))?;
    listener
        .set_nonblocking(true)
        .map_err(|e| BridgeError::Setup(e.to_string()))?;

    let stop = Arc::new(AtomicBool::new(false));
    let clients: Clients = Arc::new(Mutex::new(Vec::new()));
    let mut threads = Vec::new();

    for name in &opts.exposed {
        let sub = bus.subscribe(name).map_err(|e| BridgeError::Setup(e.to_string()))?;
        let stop = stop.clone();
        let clients = clients.clone();
        threads.push(thread::spawn(move || {
            while !stop.load(Ordering::SeqCst) {
                if let Some(env) = sub.recv_timeout(Duration::from_millis(20)) {
                    let frame = envelope_frame(&env).to_string();
                    for slot in clients.lock().unwrap().iter() {
                        let _ = slot.tx.send(frame.clone());
                    }
                }
            }
        }));
    }

    let accept_bus = bus.clone();
    let accept_stop = stop.clone();
    let accept_clients = clients.clone();
    let map = Arc::new(opts.map);
    threads.push(thread::spawn(move || {
        let next_id = AtomicU64::new(1);
        let mut workers: Vec<JoinHandle<()>> = Vec::new();
        while !accept_stop.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, _)) => {
                    let bus = accept_bus.clone();
                    let stop = accept_stop.clone();
                    let clients = accept_clients.clone();
                    let map = map.clone();
                    let id = next_id.fetch_add(1, Ordering::Relaxed);
                    workers.push(thread::spawn(move || {
                        if let Err(e) = serve_connection(stream, id, &bus, &stop, &clients, &map) {
                            log::debug!("bridge connection {id} ended: {e}");
                        }
                        clients.lock().unwrap().retain(|c| c.id != id);
                    }));
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    thread::sleep(Duration::from_millis(10));
                }
                Err(e) => {
                    log::warn!("bridge accept failed: {e}");
                    thread::sleep(Duration::from_millis(10));
                }
            }
            workers.retain(|w| !w.is_finished());
        }
        for w in workers {
            let _ = w.join();
        }
    }));

    Ok(BridgeHandle {
        addr,
        stop,
        clients,
        threads,
    })
}

/// Read the request head without consuming it.
fn peek_head(stream: &TcpStream) -> io::Result<String> {
    let deadline = Instant::now() + Duration::from_secs(2);
    let mut buf = [0u8; 2048];
    loop {
        let n = stream.peek(&mut buf)?;
        let head = String::from_utf8_lossy(&buf[..n]).to_string();
        if head.contains("\r\n\r\n") || n == buf.len() || Instant::now() > deadline {
            return Ok(head);
        }
        if n == 0 {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "closed before request"));
        }
        thread::sleep(Duration::from_millis(2));
    }
}

fn serve_connection(
    stream: TcpStream,
    id: u64,
    bus: &Bus,
    stop: &AtomicBool,
    clients: &Clients,
    map: &Option<Value>,
) -> Result<(), String> {
    stream.set_nonblocking(false).map_err(|e| e.to_string())?;
    stream
        .set_read_timeout(Some(Duration::from_secs(2)))
        .map_err(|e| e.to_string())?;
    let head = peek_head(&stream).map_err(|e| e.to_string())?;
    if !head.to_ascii_lowercase().contains("upgrade: websocket") {
        return serve_http(stream, &head, map);
    }

    let (tx, rx) = mpsc::channel();
    clients.lock().unwrap().push(ClientSlot { id, tx });
    let ws = tungstenite::accept(stream).map_err(|e| e.to_string())?;
    ws.get_ref()
        .set_read_timeout(Some(Duration::from_millis(10)))
        .map_err(|e| e.to_string())?;
    pump(ws, rx, bus, stop)
}

fn pump(mut ws: WebSocket<TcpStream>, rx: Receiver<String>, bus: &Bus, stop: &AtomicBool) -> Result<(), String> {
    use tungstenite::{Error as WsError, Message as WsMessage};
    while !stop.load(Ordering::SeqCst) {
        match ws.read() {
            Ok(WsMessage::Text(text)) => match parse_client_frame(text.as_str()) {
                Ok(chat) => {
                    if let Err(e) = bus.publish(topics::CHAT_IN, Message::Chat(chat)) {
                        let _ = ws.send(WsMessage::text(error_frame(bus.now(), &e.to_string())));
                    }
                }
                Err(reason) => {
                    ws.send(WsMessage::text(error_frame(bus.now(), &reason)))
                        .map_err(|e| e.to_string())?;
                }
            },
            Ok(WsMessage::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(WsError::Io(e)) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(WsError::ConnectionClosed) | Err(WsError::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e.to_string()),
        }
        while let Ok(frame) = rx.try_recv() {
            ws.send(WsMessage::text(frame)).map_err(|e| e.to_string())?;
        }
    }
    let _ = ws.close(None);
    let _ = ws.flush();
    Ok(())
}

fn serve_http(mut stream: TcpStream, head: &str, map: &Option<Value>) -> Result<(), String> {
    let header_len = head.find("\r\n\r\n").map(|i| i + 4).unwrap_or(head.len());
    let mut discard = vec![0u8; header_len];
    let _ = stream.read_exact(&mut discard);
    let request_line = head.lines().next().unwrap_or_default();
    let mut parts = request_line.split_whitespace();
    let (method, path) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    let (status, body) = match (method, path, map) {
        ("GET", "/map", Some(map)) => ("200 OK", map.to_string()),
        ("GET", "/map", None) => ("404 Not Found", r#"{"error":"no map loaded"}"#.to_string()),
        _ => ("404 Not Found", r#"{"error":"not found"}"#.to_string()),
    };
    let response = format!(
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nAccess-Control-Allow-Origin: *\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(response.as_bytes()).map_err(|e| e.to_string())?;
    stream.flush().map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_payload_and_top_level_text() {
        let m = parse_client_frame(r#"{"topic":"chat/in","payload":{"text":"go"}}"#).unwrap();
        assert_eq!(m.text, "go");
        let m = parse_client_frame(r#"{"topic":"chat/in","text":"move forward","stamp":3.5}"#).unwrap();
        assert_eq!(m.text, "move forward");
        assert_eq!(m.sent, Some(3.5));
    }

    #[test]
    fn rejects_bad_frames() {
        assert!(parse_client_frame("{not json").is_err());
        assert!(parse_client_frame("[1,2]").is_err());
        assert!(parse_client_frame(r#"{"topic":"cmd_vel","payload":{}}"#).is_err());
        assert!(parse_client_frame(r#"{"topic":"chat/in"}"#).is_err());
    }
}
