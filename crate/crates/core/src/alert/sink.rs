use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::io::AsyncWriteExt;

use super::{AlertError, AlertEvent, AlertMessage};

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("http: {0}")]
    Http(String),
}

/// Destination for alert notifications.
#[async_trait]
pub trait AlertSink: Send + Sync {
    fn name(&self) -> &str;
    async fn deliver(&self, message: &AlertMessage, event: &AlertEvent) -> Result<(), SinkError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SinkConfig {
    /// JSONL file, one message per line.
    File { path: PathBuf },
    /// HTTP POST of `{subject, body, event}`.
    Webhook { url: String },
    /// RFC-822 style messages appended to a mailbox file.
    Smtp { path: PathBuf, from: String },
}

pub fn build_sinks(configs: &[SinkConfig]) -> Result<Vec<Arc<dyn AlertSink>>, AlertError> {
    if configs.is_empty() {
        return Err(AlertError::Configuration("at least one alert sink is required".into()));
    }
    configs
        .iter()
        .map(|c| -> Result<Arc<dyn AlertSink>, AlertError> {
            Ok(match c {
                SinkConfig::File { path } => Arc::new(FileSink::new(path.clone())),
                SinkConfig::Webhook { url } => Arc::new(WebhookSink::new(url)?),
                SinkConfig::Smtp { path, from } => Arc::new(SmtpFileSink::new(path.clone(), from)),
            })
        })
        .collect()
}

async fn append(path: &PathBuf, text: &str) -> std::io::Result<()> {
    let mut file = tokio::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .await?;
    file.write_all(text.as_bytes()).await?;
    file.flush().await
}

pub struct FileSink {
    name: String,
    path: PathBuf,
}

impl FileSink {
    pub fn new(path: PathBuf) -> Self {
        FileSink {
            name: format!("file:{}", path.display()),
            path,
        }
    }
}

#[derive(Serialize)]
struct FileRecord<'a> {
    event_id: u64,
    timestamp_ms: u64,
    subject: &'a str,
    body: &'a str,
    recipients: &'a [String],
}

#[async_trait]
impl AlertSink for FileSink {
    fn name(&self) -> &str {
        &self.name
    }

    async fn deliver(&self, message: &AlertMessage, event: &AlertEvent) -> Result<(), SinkError> {
        let record = FileRecord {
            event_id: event.event_id,
            timestamp_ms: event.timestamp_ms,
            subject: &message.subject,
            body: &message.body,
            recipients: &message.recipients,
        };
        let mut line = serde_json::to_string(&record).map_err(std::io::Error::other)?;
        line.push('\n');
        append(&self.path, &line).await?;
        Ok(())
    }
}

pub struct WebhookSink {
    name: String,
    url: String,
    client: reqwest::Client,
}

impl WebhookSink {
    pub fn new(url: &str) -> Result<Self, AlertError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(5))
            .build()
            .map_err(|e| AlertError::Configuration(format!("webhook client: {e}")))?;
        Ok(WebhookSink {
            name: format!("webhook:{url}"),
            url: url.to_string(),
            client,
        })
    }
}

#[derive(Serialize)]
struct WebhookPayload<'a> {
    subject: &'a str,
    body: &'a str,
    event: &'a AlertEvent,
}

#[async_trait]
impl AlertSink for WebhookSink {
    fn name(&self) -> &str {
        &self.name
    }

    async fn deliver(&self, message: &AlertMessage, event: &AlertEvent) -> Result<(), SinkError> {
        let payload = WebhookPayload {
            subject: &message.subject,
            body: &message.body,
            event,
        };
        let response = self
            .client
            .post(&self.url)
            .json(&payload)
            .send()
            .await
            .map_err(|e| SinkError::Http(e.to_string()))?;
        if !response.status().is_success() {
            return Err(SinkError::Http(format!("status {}", response.status())));
        }
        Ok(())
    }
}

pub struct SmtpFileSink {
    name: String,
    path: PathBuf,
    from: String,
}

impl SmtpFileSink {
    pub fn new(path: PathBuf, from: &str) -> Self {
        SmtpFileSink {
            name: format!("smtp:{}", path.display()),
            path,
            from: from.to_string(),
        }
    }
}

/// Renders an RFC-822 style message terminated by a blank line.
pub(crate) fn render_rfc822(from: &str, message: &AlertMessage, event: &AlertEvent) -> String {
    let date = chrono::DateTime::from_timestamp_millis(event.timestamp_ms as i64)
        .unwrap_or_default()
        .to_rfc2822();
    let mut out = String::new();
    out.push_str(&format!("From: {from}\r\n"));
    out.push_str(&format!("To: {}\r\n", message.recipients.join(", ")));
    out.push_str(&format!("Subject: {}\r\n", message.subject));
    out.push_str(&format!("Date: {date}\r\n"));
    out.push_str(&format!("X-Alert-Event-Id: {}\r\n", event.event_id));
    out.push_str("Content-Type: text/plain; charset=utf-8\r\n\r\n");
    for line in message.body.lines() {
        out.push_str(line);
        out.push_str("\r\n");
    }
    out.push_str("\r\n");
    out
}

#[async_trait]
impl AlertSink for SmtpFileSink {
    fn name(&self) -> &str {
        &self.name
    }

    async fn deliver(&self, message: &AlertMessage, event: &AlertEvent) -> Result<(), SinkError> {
        append(&self.path, &render_rfc822(&self.from, message, event)).await?;
        Ok(())
    }
}
