//! Service configuration loaded from a JSON file.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use sensordash_analytics::gaze::Screen;
use sensordash_core::alert::{AlertRule, SinkConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    /// UDP address datagrams are received on, e.g. `0.0.0.0:5005`.
    pub listen_udp: String,
    /// HTTP address of the API, e.g. `127.0.0.1:8080`.
    pub listen_http: String,
    #[serde(default)]
    pub sinks: Vec<SinkConfig>,
    /// Addresses named in alert message headers.
    #[serde(default)]
    pub recipients: Vec<String>,
    #[serde(default)]
    pub rules: Vec<AlertRule>,
    /// JSONL file every stored reading is appended to.
    #[serde(default)]
    pub persistence_path: Option<PathBuf>,
    /// JSONL alert log; reloaded on start so event ids keep increasing.
    #[serde(default)]
    pub alert_log_path: Option<PathBuf>,
    /// Screen size assumed by the gaze endpoint when a request omits it.
    #[serde(default)]
    pub screen: Screen,
    /// Samples retained per sensor.
    #[serde(default)]
    pub capacity: Option<usize>,
}

impl ServiceConfig {
    /// Loopback addresses on ephemeral ports and no alerting; used by tests.
    pub fn ephemeral() -> Self {
        ServiceConfig {
            listen_udp: "127.0.0.1:0".into(),
            listen_http: "127.0.0.1:0".into(),
            sinks: Vec::new(),
            recipients: Vec::new(),
            rules: Vec::new(),
            persistence_path: None,
            alert_log_path: None,
            screen: Screen::default(),
            capacity: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ServiceConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn udp_addr(&self) -> Result<SocketAddr, ConfigError> {
        parse_addr("listen_udp", &self.listen_udp)
    }

    pub fn http_addr(&self) -> Result<SocketAddr, ConfigError> {
        parse_addr("listen_http", &self.listen_http)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let udp = self.udp_addr()?;
        let http = self.http_addr()?;
        // Port 0 asks the OS for an ephemeral port, so two zeros never collide.
        if udp.port() != 0 && udp.port() == http.port() {
            return Err(ConfigError::Invalid(format!(
                "listen_udp and listen_http share port {}",
                udp.port()
            )));
        }
        if self.sinks.is_empty() && self.rules.iter().any(|r| r.enabled) {
            return Err(ConfigError::Invalid(
                "enabled alert rules need at least one sink".into(),
            ));
        }
        for rule in &self.rules {
            rule.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if self.capacity == Some(0) {
            return Err(ConfigError::Invalid("capacity must be positive".into()));
        }
        Ok(())
    }
}

fn parse_addr(field: &str, value: &str) -> Result<SocketAddr, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::Invalid(format!("{field} must be host:port, got {value:?}")))
}
