//! Threshold alerting: rule storage, edge-triggered evaluation, manual alerts,
//! message formatting and delivery to sinks.

mod dispatch;
mod message;
mod sink;

pub use dispatch::{dispatch, AlertLog, AlertLogEntry, DeliveryResult, Dispatcher};
pub use message::{format_alert, AlertMessage};
pub use sink::{build_sinks, AlertSink, FileSink, SinkConfig, SinkError, SmtpFileSink, WebhookSink};

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reading::{is_valid_node_id, SensorKey, SensorReading};
use crate::store::Store;

pub const MANUAL_RULE_ID: &str = "manual";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlertError {
    #[error("invalid rule: {0}")]
    Validation(String),
    #[error("selection matches no known sensor")]
    EmptySelection,
    #[error("configuration error: {0}")]
    Configuration(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    One(SensorKey),
    All,
    Subset(Vec<SensorKey>),
}

impl Selection {
    pub fn covers(&self, key: &SensorKey) -> bool {
        match self {
            Selection::One(k) => k == key,
            Selection::All => true,
            Selection::Subset(keys) => keys.contains(key),
        }
    }

    pub fn validate(&self) -> Result<(), AlertError> {
        if let Selection::Subset(keys) = self {
            if keys.is_empty() {
                return Err(AlertError::Validation("subset selection is empty".into()));
            }
            let unique: HashSet<&SensorKey> = keys.iter().collect();
            if unique.len() != keys.len() {
                return Err(AlertError::Validation("subset selection has duplicates".into()));
            }
        }
        Ok(())
    }

    /// Known keys covered by this selection, in key order.
    pub fn resolve(&self, known: &[SensorKey]) -> Vec<SensorKey> {
        known.iter().filter(|k| self.covers(k)).cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Above,
    Below,
}

impl Comparator {
    /// Strict comparison; a value equal to the threshold never fires.
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::Above => value > threshold,
            Comparator::Below => value < threshold,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Above => "above",
            Comparator::Below => "below",
        }
    }
}

fn default_enabled() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertRule {
    #[serde(default)]
    pub rule_id: String,
    pub selection: Selection,
    pub comparator: Comparator,
    pub threshold: f64,
    #[serde(default = "default_enabled")]
    pub enabled: bool,
}

impl AlertRule {
    pub fn validate(&self) -> Result<(), AlertError> {
        if !self.rule_id.is_empty() && !is_valid_node_id(&self.rule_id) {
            return Err(AlertError::Validation(format!("bad rule id {:?}", self.rule_id)));
        }
        if self.rule_id == MANUAL_RULE_ID {
            return Err(AlertError::Validation("rule id \"manual\" is reserved".into()));
        }
        if !self.threshold.is_finite() {
            return Err(AlertError::Validation("threshold must be finite".into()));
        }
        self.selection.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertKind {
    Automatic,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub event_id: u64,
    pub rule_id: String,
    pub key: SensorKey,
    pub triggering_value: f64,
    /// Absent for manual alerts.
    pub threshold: Option<f64>,
    pub comparator: Option<Comparator>,
    pub timestamp_ms: u64,
    pub kind: AlertKind,
}

/// Latched `(rule, sensor)` pairs: the comparator is currently true and the
/// pair has already fired.
pub type ArmedState = HashSet<(String, SensorKey)>;

/// Edge-triggered evaluation of `rules` against one stored reading.
///
/// Fires on each false→true transition of a rule's comparator for the
/// reading's sensor; the pair re-arms once the comparator is false again.
/// Returned events carry `event_id` 0; callers assign identifiers.
pub fn evaluate<'a>(
    rules: impl IntoIterator<Item = &'a AlertRule>,
    reading: &SensorReading,
    latched: &mut ArmedState,
) -> Vec<AlertEvent> {
    let key = reading.key();
    let mut events = Vec::new();
    for rule in rules {
        if !rule.enabled || !rule.selection.covers(&key) {
            continue;
        }
        let pair = (rule.rule_id.clone(), key.clone());
        if rule.comparator.holds(reading.value, rule.threshold) {
            if latched.insert(pair) {
                events.push(AlertEvent {
                    event_id: 0,
                    rule_id: rule.rule_id.clone(),
                    key: key.clone(),
                    triggering_value: reading.value,
                    threshold: Some(rule.threshold),
                    comparator: Some(rule.comparator),
                    timestamp_ms: reading.timestamp_ms,
                    kind: AlertKind::Automatic,
                });
            }
        } else {
            latched.remove(&pair);
        }
    }
    events
}

/// Rule set plus latch state, safe to share between the ingest path and API
/// handlers. Rule updates are atomic with respect to evaluation.
#[derive(Debug, Default)]
pub struct RuleEngine {
    rules: RwLock<BTreeMap<String, AlertRule>>,
    latched: Mutex<ArmedState>,
    next_rule: AtomicU64,
    next_event: AtomicU64,
}

impl RuleEngine {
    pub fn new() -> Self {
        RuleEngine {
            next_event: AtomicU64::new(1),
            next_rule: AtomicU64::new(1),
            ..Default::default()
        }
    }

    /// Inserts or replaces a rule. An empty `rule_id` gets a generated one.
    /// Replacing a rule clears its latches.
    pub fn upsert_rule(&self, mut rule: AlertRule) -> Result<String, AlertError> {
        rule.validate()?;
        let mut rules = self.rules.write().unwrap_or_else(|e| e.into_inner());
        if rule.rule_id.is_empty() {
            rule.rule_id = loop {
                let candidate = format!("rule-{}", self.next_rule.fetch_add(1, Ordering::Relaxed));
                if !rules.contains_key(&candidate) {
                    break candidate;
                }
            };
        }
        let id = rule.rule_id.clone();
        self.latched
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .retain(|(rid, _)| rid != &id);
        rules.insert(id.clone(), rule);
        Ok(id)
    }

    pub fn remove_rule(&self, rule_id: &str) -> bool {
        let mut rules = self.rules.write().unwrap_or_else(|e| e.into_inner());
        self.latched
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .retain(|(rid, _)| rid != rule_id);
        rules.remove(rule_id).is_some()
    }

    pub fn rules(&self) -> Vec<AlertRule> {
        self.rules
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.rules.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn any_enabled(&self) -> bool {
        self.rules
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .any(|r| r.enabled)
    }

    pub fn evaluate(&self, reading: &SensorReading) -> Vec<AlertEvent> {
        let rules = self.rules.read().unwrap_or_else(|e| e.into_inner());
        let mut latched = self.latched.lock().unwrap_or_else(|e| e.into_inner());
        let mut events = evaluate(rules.values(), reading, &mut latched);
        for e in &mut events {
            e.event_id = self.next_event_id();
        }
        events
    }

    /// One manual event per selected known sensor, carrying its latest value.
    pub fn manual_alert(
        &self,
        selection: &Selection,
        store: &Store,
        now_ms: u64,
    ) -> Result<Vec<AlertEvent>, AlertError> {
        selection.validate()?;
        let events: Vec<AlertEvent> = store
            .latest_all()
            .into_iter()
            .filter(|(key, _)| selection.covers(key))
            .map(|(key, sample)| AlertEvent {
                event_id: self.next_event_id(),
                rule_id: MANUAL_RULE_ID.to_string(),
                key,
                triggering_value: sample.value,
                threshold: None,
                comparator: None,
                timestamp_ms: now_ms,
                kind: AlertKind::Manual,
            })
            .collect();
        if events.is_empty() {
            return Err(AlertError::EmptySelection);
        }
        Ok(events)
    }

    fn next_event_id(&self) -> u64 {
        self.next_event.fetch_add(1, Ordering::Relaxed)
    }

    /// Continues event numbering after `last_id` (e.g. after reloading a log).
    pub fn resume_event_ids_after(&self, last_id: u64) {
        self.next_event.fetch_max(last_id + 1, Ordering::Relaxed);
    }
}
