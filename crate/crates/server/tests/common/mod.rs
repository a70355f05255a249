//! Helpers for driving a running service over UDP, HTTP and SSE.
#![allow(dead_code)]

use std::net::SocketAddr;
use std::pin::Pin;
use std::time::Duration;

use axum::body::Bytes;
use futures::{Stream, StreamExt};
use sensordash::{start, ServiceConfig, ServiceHandle};
use sensordash_core::{encode_datagram, NodeId, SensorKey, SensorReading, SensorType};
use tokio::net::UdpSocket;

pub async fn service(config: ServiceConfig) -> (ServiceHandle, String) {
    let handle = start(config).await.expect("service starts");
    let base = format!("http://{}", handle.http_addr);
    (handle, base)
}

pub fn key(node: &str, sensor: SensorType) -> SensorKey {
    SensorKey::new(NodeId::new(node).unwrap(), sensor)
}

pub fn reading(node: &str, sensor: SensorType, seq: u32, ts: u64, value: f64) -> SensorReading {
    SensorReading::new(NodeId::new(node).unwrap(), sensor, seq, ts, value).unwrap()
}

pub struct Sender {
    socket: UdpSocket,
    target: SocketAddr,
}

impl Sender {
    pub async fn new(target: SocketAddr) -> Self {
        Sender {
            socket: UdpSocket::bind("127.0.0.1:0").await.unwrap(),
            target,
        }
    }

    pub async fn send(&self, reading: &SensorReading) {
        let bytes = encode_datagram(reading).unwrap();
        self.socket.send_to(&bytes, self.target).await.unwrap();
    }

    pub async fn send_raw(&self, bytes: &[u8]) {
        self.socket.send_to(bytes, self.target).await.unwrap();
    }
}

/// Polls `f` every 10 ms until it returns `Some` or `limit` passes.
pub async fn eventually<T, F, Fut>(limit: Duration, mut f: F) -> Option<T>
where
    F: FnMut() -> Fut,
    Fut: std::future::Future<Output = Option<T>>,
{
    let deadline = tokio::time::Instant::now() + limit;
    loop {
        if let Some(v) = f().await {
            return Some(v);
        }
        if tokio::time::Instant::now() >= deadline {
            return None;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SseEvent {
    pub event: String,
    pub id: Option<String>,
    pub data: String,
}

impl SseEvent {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.data).unwrap()
    }
}

/// Minimal event-stream reader.
pub struct SseClient {
    body: Pin<Box<dyn Stream<Item = reqwest::Result<Bytes>> + Send>>,
    buf: String,
}

impl SseClient {
    pub async fn connect(base: &str, last_event_id: Option<u64>) -> Self {
        let mut req = reqwest::Client::new().get(format!("{base}/stream"));
        if let Some(id) = last_event_id {
            req = req.header("Last-Event-ID", id.to_string());
        }
        let resp = req.send().await.unwrap();
        assert_eq!(resp.status(), 200);
        assert!(resp.headers()["content-type"].to_str().unwrap().starts_with("text/event-stream"));
        SseClient {
            body: Box::pin(resp.bytes_stream()),
            buf: String::new(),
        }
    }

    fn parse_block(block: &str) -> Option<SseEvent> {
        let mut ev = SseEvent {
            event: "message".into(),
            id: None,
            data: String::new(),
        };
        let mut has_data = false;
        for line in block.lines() {
            let (field, value) = line.split_once(':').unwrap_or((line, ""));
            let value = value.strip_prefix(' ').unwrap_or(value);
            match field {
                "event" => ev.event = value.to_string(),
                "id" => ev.id = Some(value.to_string()),
                "data" => {
                    if has_data {
                        ev.data.push('\n');
                    }
                    ev.data.push_str(value);
                    has_data = true;
                }
                _ => {}
            }
        }
        has_data.then_some(ev)
    }

    /// Next event other than keep-alive comments, or `None` on timeout or
    /// end of stream.
    pub async fn next(&mut self, limit: Duration) -> Option<SseEvent> {
        let deadline = tokio::time::Instant::now() + limit;
        loop {
            while let Some(end) = self.buf.find("\n\n") {
                let block: String = self.buf.drain(..end + 2).collect();
                if let Some(ev) = Self::parse_block(&block) {
                    return Some(ev);
                }
            }
            let chunk = tokio::time::timeout_at(deadline, self.body.next()).await.ok()??;
            self.buf.push_str(&String::from_utf8_lossy(&chunk.ok()?));
        }
    }

    /// Next event named `name`, skipping others.
    pub async fn next_named(&mut self, name: &str, limit: Duration) -> Option<SseEvent> {
        let deadline = tokio::time::Instant::now() + limit;
        loop {
            let left = deadline.saturating_duration_since(tokio::time::Instant::now());
            let ev = self.next(left).await?;
            if ev.event == name {
                return Some(ev);
            }
        }
    }
}
