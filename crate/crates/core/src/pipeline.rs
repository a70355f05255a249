//! Ingest path: decode → store → evaluate rules → publish → dispatch.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::broadcast;

use crate::alert::{
    build_sinks, format_alert, AlertError, AlertEvent, AlertLog, AlertLogEntry, AlertMessage,
    AlertRule, Dispatcher, RuleEngine, Selection, SinkConfig,
};
use crate::clock::{Clock, SystemClock};
use crate::codec::{decode_datagram, CodecError};
use crate::reading::{NodeId, SensorReading, SensorType};
use crate::store::{IngestOutcome, Store, DEFAULT_CAPACITY};

const DEFAULT_STREAM_CAPACITY: usize = 1024;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Alert(#[from] AlertError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Item published to live subscribers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StreamEvent {
    Reading(SensorReading),
    Alert(AlertEvent),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub outcome: IngestOutcome,
    pub alerts: Vec<AlertEvent>,
}

pub struct PipelineBuilder {
    capacity: usize,
    sinks: Vec<SinkConfig>,
    recipients: Vec<String>,
    rules: Vec<AlertRule>,
    persistence_path: Option<PathBuf>,
    alert_log_path: Option<PathBuf>,
    clock: Arc<dyn Clock>,
    stream_capacity: usize,
}

impl Default for PipelineBuilder {
    fn default() -> Self {
        PipelineBuilder {
            capacity: DEFAULT_CAPACITY,
            sinks: Vec::new(),
            recipients: Vec::new(),
            rules: Vec::new(),
            persistence_path: None,
            alert_log_path: None,
            clock: Arc::new(SystemClock),
            stream_capacity: DEFAULT_STREAM_CAPACITY,
        }
    }
}

impl PipelineBuilder {
    pub fn capacity(mut self, capacity: usize) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn sinks(mut self, sinks: Vec<SinkConfig>) -> Self {
        self.sinks = sinks;
        self
    }

    pub fn recipients(mut self, recipients: Vec<String>) -> Self {
        self.recipients = recipients;
        self
    }

    pub fn rules(mut self, rules: Vec<AlertRule>) -> Self {
        self.rules = rules;
        self
    }

    pub fn persistence_path(mut self, path: Option<PathBuf>) -> Self {
        self.persistence_path = path;
        self
    }

    pub fn alert_log_path(mut self, path: Option<PathBuf>) -> Self {
        self.alert_log_path = path;
        self
    }

    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn stream_capacity(mut self, capacity: usize) -> Self {
        self.stream_capacity = capacity.max(1);
        self
    }

    /// Must be called inside a tokio runtime when sinks are configured.
    pub fn build(self) -> Result<Pipeline, PipelineError> {
        let rules = RuleEngine::new();
        for rule in self.rules {
            rules.upsert_rule(rule)?;
        }
        if self.sinks.is_empty() && rules.any_enabled() {
            return Err(AlertError::Configuration(
                "enabled alert rules need at least one sink".into(),
            )
            .into());
        }
        let log = Arc::new(match &self.alert_log_path {
            Some(path) => AlertLog::open(path)?,
            None => AlertLog::in_memory(),
        });
        if let Some(last) = log.last_event_id() {
            rules.resume_event_ids_after(last);
        }
        let dispatcher = if self.sinks.is_empty() {
            None
        } else {
            let sinks = build_sinks(&self.sinks)?;
            Some(Dispatcher::start(sinks, log.clone(), self.clock.clone())?)
        };
        let persistence = match self.persistence_path {
            Some(path) => {
                let file = std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)?;
                Some(Mutex::new(BufWriter::new(file)))
            }
            None => None,
        };
        let (stream, _) = broadcast::channel(self.stream_capacity);
        Ok(Pipeline {
            store: Store::new(self.capacity.max(1)),
            rules,
            log,
            dispatcher: Mutex::new(dispatcher),
            recipients: self.recipients,
            persistence,
            stream,
            clock: self.clock,
        })
    }
}

/// Shared service state: store, rules, alert log and live stream.
pub struct Pipeline {
    store: Store,
    rules: RuleEngine,
    log: Arc<AlertLog>,
    dispatcher: Mutex<Option<Dispatcher>>,
    recipients: Vec<String>,
    persistence: Option<Mutex<BufWriter<File>>>,
    stream: broadcast::Sender<StreamEvent>,
    clock: Arc<dyn Clock>,
}

impl Pipeline {
    pub fn builder() -> PipelineBuilder {
        PipelineBuilder::default()
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn rules(&self) -> &RuleEngine {
        &self.rules
    }

    pub fn alert_log(&self) -> &Arc<AlertLog> {
        &self.log
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Whether alert events are delivered anywhere besides the log.
    pub fn has_sinks(&self) -> bool {
        self.dispatcher
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .is_some()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StreamEvent> {
        self.stream.subscribe()
    }

    pub fn ingest_datagram(&self, bytes: &[u8]) -> Result<IngestReport, CodecError> {
        let reading = decode_datagram(bytes)?;
        Ok(self.ingest(reading))
    }

    /// Stores the reading; on success evaluates rules synchronously, publishes
    /// the reading and any alerts, and queues alert delivery.
    pub fn ingest(&self, reading: SensorReading) -> IngestReport {
        let outcome = self.store.ingest(&reading);
        if outcome != IngestOutcome::Stored {
            return IngestReport {
                outcome,
                alerts: Vec::new(),
            };
        }
        self.persist(&reading);
        let alerts = self.rules.evaluate(&reading);
        let _ = self.stream.send(StreamEvent::Reading(reading));
        self.publish_alerts(&alerts);
        IngestReport { outcome, alerts }
    }

    pub fn manual_alert(&self, selection: &Selection) -> Result<Vec<AlertEvent>, AlertError> {
        let events = self
            .rules
            .manual_alert(selection, &self.store, self.clock.now_ms())?;
        self.publish_alerts(&events);
        Ok(events)
    }

    /// Latest value of every sensor on `node`, sorted by sensor type name.
    pub fn node_snapshot(&self, node: &NodeId) -> Vec<(SensorType, f64)> {
        self.store
            .latest_all()
            .into_iter()
            .filter(|(k, _)| &k.node_id == node)
            .map(|(k, s)| (k.sensor_type, s.value))
            .collect()
    }

    pub fn message_for(&self, event: &AlertEvent) -> AlertMessage {
        let snapshot = self.node_snapshot(&event.key.node_id);
        format_alert(event, &snapshot, &self.recipients)
    }

    fn publish_alerts(&self, events: &[AlertEvent]) {
        for event in events {
            let message = self.message_for(event);
            let _ = self.stream.send(StreamEvent::Alert(event.clone()));
            let dispatcher = self.dispatcher.lock().unwrap_or_else(|e| e.into_inner());
            match dispatcher.as_ref() {
                Some(d) => d.submit(event.clone(), message),
                None => self.log.append(AlertLogEntry {
                    event: event.clone(),
                    subject: message.subject,
                    deliveries: Vec::new(),
                    logged_at_ms: self.clock.now_ms(),
                }),
            }
        }
    }

    fn persist(&self, reading: &SensorReading) {
        let Some(writer) = &self.persistence else {
            return;
        };
        let result = serde_json::to_string(reading)
            .map_err(std::io::Error::other)
            .and_then(|line| {
                let mut w = writer.lock().unwrap_or_else(|e| e.into_inner());
                writeln!(w, "{line}")?;
                w.flush()
            });
        if let Err(err) = result {
            tracing::error!(%err, "failed to persist reading");
        }
    }

    /// Stops accepting alert deliveries and waits for queued ones.
    pub async fn shutdown(&self) {
        let dispatcher = self
            .dispatcher
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .take();
        if let Some(d) = dispatcher {
            d.shutdown().await;
        }
    }
}

/// Reads a JSONL file of readings as written by the persistence option.
pub fn read_jsonl(path: &Path) -> std::io::Result<Vec<SensorReading>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reading: SensorReading = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("line {}: {e}", lineno + 1),
            )
        })?;
        if !crate::reading::is_valid_value(reading.value) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("line {}: value out of range", lineno + 1),
            ));
        }
        out.push(reading);
    }
    Ok(out)
}
