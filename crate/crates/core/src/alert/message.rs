use serde::{Deserialize, Serialize};

use super::{AlertEvent, AlertKind};
use crate::reading::{format_value, SensorType};

/// Email-style alert notification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertMessage {
    pub subject: String,
    pub body: String,
    pub recipients: Vec<String>,
}

/// Builds the notification for `event`.
///
/// `node_snapshot` holds the latest value of every sensor on the event's node;
/// the body has one trigger line followed by one `<sensor_type>: <value> <unit>`
/// line per sensor, sorted by sensor type name.
pub fn format_alert(
    event: &AlertEvent,
    node_snapshot: &[(SensorType, f64)],
    recipients: &[String],
) -> AlertMessage {
    let sensor = event.key.sensor_type;
    let node = &event.key.node_id;
    let unit = sensor.unit();
    let value = format_value(event.triggering_value);
    let (subject, trigger) = match event.kind {
        AlertKind::Automatic => {
            let cmp = event.comparator.map(|c| c.as_str()).unwrap_or("beyond");
            let threshold = event
                .threshold
                .map(format_value)
                .unwrap_or_else(|| "?".to_string());
            (
                format!("ALERT: {sensor} threshold crossed on {node}"),
                format!(
                    "Trigger: {sensor} = {value} {unit} ({cmp} threshold {threshold} {unit}) at {} [rule {}]",
                    event.timestamp_ms, event.rule_id
                ),
            )
        }
        AlertKind::Manual => (
            format!("MANUAL ALERT: {sensor} on {node}"),
            format!(
                "Trigger: manual alert, {sensor} = {value} {unit} at {}",
                event.timestamp_ms
            ),
        ),
    };
    let mut snapshot = node_snapshot.to_vec();
    snapshot.sort_by_key(|(t, _)| t.as_str());
    let mut lines = vec![trigger];
    lines.extend(
        snapshot
            .iter()
            .map(|(t, v)| format!("{t}: {} {}", format_value(*v), t.unit())),
    );
    AlertMessage {
        subject,
        body: lines.join("\n"),
        recipients: recipients.to_vec(),
    }
}
