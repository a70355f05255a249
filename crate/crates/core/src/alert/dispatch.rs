use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;

use super::{AlertError, AlertEvent, AlertMessage, AlertSink};
use crate::clock::Clock;

const DEFAULT_LOG_MEMORY: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryResult {
    pub sink: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One line of the alert log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertLogEntry {
    pub event: AlertEvent,
    pub subject: String,
    pub deliveries: Vec<DeliveryResult>,
    pub logged_at_ms: u64,
}

/// Delivers `message` to every sink concurrently. Failures are captured per
/// sink and never propagate.
pub async fn dispatch(
    message: &AlertMessage,
    event: &AlertEvent,
    sinks: &[Arc<dyn AlertSink>],
) -> Vec<DeliveryResult> {
    let deliveries = sinks.iter().map(|sink| async move {
        match sink.deliver(message, event).await {
            Ok(()) => DeliveryResult {
                sink: sink.name().to_string(),
                ok: true,
                error: None,
            },
            Err(err) => {
                tracing::warn!(sink = sink.name(), event = event.event_id, %err, "alert delivery failed");
                DeliveryResult {
                    sink: sink.name().to_string(),
                    ok: false,
                    error: Some(err.to_string()),
                }
            }
        }
    });
    futures::future::join_all(deliveries).await
}

/// Recent alert log entries in memory, mirrored to an optional JSONL file.
#[derive(Debug)]
pub struct AlertLog {
    entries: Mutex<VecDeque<AlertLogEntry>>,
    max_entries: usize,
    file: Option<Mutex<std::fs::File>>,
    path: Option<PathBuf>,
}

impl Default for AlertLog {
    fn default() -> Self {
        AlertLog::in_memory()
    }
}

impl AlertLog {
    pub fn in_memory() -> Self {
        AlertLog {
            entries: Mutex::new(VecDeque::new()),
            max_entries: DEFAULT_LOG_MEMORY,
            file: None,
            path: None,
        }
    }

    /// Opens (or creates) a JSONL log, loading existing entries so clients
    /// can resume from earlier event ids.
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = VecDeque::new();
        if path.exists() {
            let reader = std::io::BufReader::new(std::fs::File::open(&path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<AlertLogEntry>(&line) {
                    Ok(entry) => {
                        entries.push_back(entry);
                        if entries.len() > DEFAULT_LOG_MEMORY {
                            entries.pop_front();
                        }
                    }
                    Err(err) => tracing::warn!(%err, "skipping unreadable alert log line"),
                }
            }
        }
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)?;
        Ok(AlertLog {
            entries: Mutex::new(entries),
            max_entries: DEFAULT_LOG_MEMORY,
            file: Some(Mutex::new(file)),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn append(&self, entry: AlertLogEntry) {
        if let Some(file) = &self.file {
            let written = serde_json::to_string(&entry)
                .map_err(std::io::Error::other)
                .and_then(|line| {
                    let mut f = file.lock().unwrap_or_else(|e| e.into_inner());
                    writeln!(f, "{line}")
                });
            if let Err(err) = written {
                tracing::error!(%err, "failed to write alert log");
            }
        }
        let mut entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        entries.push_back(entry);
        while entries.len() > self.max_entries {
            entries.pop_front();
        }
    }

    /// Newest `limit` entries, oldest first.
    pub fn recent(&self, limit: usize) -> Vec<AlertLogEntry> {
        let entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        let skip = entries.len().saturating_sub(limit);
        entries.iter().skip(skip).cloned().collect()
    }

    /// Entries whose event id is greater than `event_id`, oldest first.
    pub fn after(&self, event_id: u64) -> Vec<AlertLogEntry> {
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .filter(|e| e.event.event_id > event_id)
            .cloned()
            .collect()
    }

    pub fn last_event_id(&self) -> Option<u64> {
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .map(|e| e.event.event_id)
            .max()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Job {
    event: AlertEvent,
    message: AlertMessage,
}

/// Background delivery worker. Submitting never blocks the caller; shutdown
/// drains every queued job before returning.
pub struct Dispatcher {
    jobs: mpsc::UnboundedSender<Job>,
    worker: JoinHandle<()>,
}

impl Dispatcher {
    pub fn start(
        sinks: Vec<Arc<dyn AlertSink>>,
        log: Arc<AlertLog>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, AlertError> {
        if sinks.is_empty() {
            return Err(AlertError::Configuration("at least one alert sink is required".into()));
        }
        let (tx, mut rx) = mpsc::unbounded_channel::<Job>();
        let worker = tokio::spawn(async move {
            while let Some(job) = rx.recv().await {
                let deliveries = dispatch(&job.message, &job.event, &sinks).await;
                log.append(AlertLogEntry {
                    subject: job.message.subject,
                    event: job.event,
                    deliveries,
                    logged_at_ms: clock.now_ms(),
                });
            }
        });
        Ok(Dispatcher { jobs: tx, worker })
    }

    pub fn submit(&self, event: AlertEvent, message: AlertMessage) {
        if self.jobs.send(Job { event, message }).is_err() {
            tracing::error!("alert dispatcher is gone; dropping alert");
        }
    }

    pub async fn shutdown(self) {
        drop(self.jobs);
        let _ = self.worker.await;
    }
}
