//! Sensor identity and reading types shared by the codec, store, simulator
//! and alert engine.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest magnitude a reading value may have. Keeps every encoded datagram
/// inside the 128-byte limit.
pub const MAX_ABS_VALUE: f64 = 1e15;

const NODE_ID_MAX_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReadingError {
    #[error("invalid node id {0:?}: expected 1-32 characters from [A-Za-z0-9_-]")]
    InvalidNodeId(String),
    #[error("unknown sensor type {0:?}")]
    UnknownSensorType(String),
    #[error("reading value {0} is not finite or exceeds ±{MAX_ABS_VALUE}")]
    InvalidValue(f64),
}

/// The kinds of sensor a factory node can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorType {
    Light,
    Temperature,
    Humidity,
    Smoke,
    Flood,
}

impl SensorType {
    pub const ALL: [SensorType; 5] = [
        SensorType::Light,
        SensorType::Temperature,
        SensorType::Humidity,
        SensorType::Smoke,
        SensorType::Flood,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SensorType::Light => "light",
            SensorType::Temperature => "temperature",
            SensorType::Humidity => "humidity",
            SensorType::Smoke => "smoke",
            SensorType::Flood => "flood",
        }
    }

    /// Native unit the values of this sensor are expressed in.
    pub fn unit(self) -> &'static str {
        match self {
            SensorType::Light => "lux",
            SensorType::Temperature => "°C",
            SensorType::Humidity => "%",
            SensorType::Smoke => "ppm",
            SensorType::Flood => "mm",
        }
    }
}

impl fmt::Display for SensorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensorType {
    type Err = ReadingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensorType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ReadingError::UnknownSensorType(s.to_string()))
    }
}

/// Validated node identifier matching `[A-Za-z0-9_-]{1,32}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, ReadingError> {
        let id = id.into();
        if is_valid_node_id(&id) {
            Ok(NodeId(id))
        } else {
            Err(ReadingError::InvalidNodeId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub fn is_valid_node_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= NODE_ID_MAX_LEN
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for NodeId {
    type Err = ReadingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeId::new(s)
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        NodeId::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Identifies one sensor series in the store.
///
/// Ordering is lexicographic on `(node_id, sensor type name)` so listings are
/// stable regardless of enum declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorKey {
    pub node_id: NodeId,
    pub sensor_type: SensorType,
}

impl SensorKey {
    pub fn new(node_id: NodeId, sensor_type: SensorType) -> Self {
        SensorKey {
            node_id,
            sensor_type,
        }
    }
}

impl Ord for SensorKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.node_id
            .cmp(&other.node_id)
            .then_with(|| self.sensor_type.as_str().cmp(other.sensor_type.as_str()))
    }
}

impl PartialOrd for SensorKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SensorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.node_id, self.sensor_type)
    }
}

/// One timestamped sample from one sensor on one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub node_id: NodeId,
    pub sensor_type: SensorType,
    pub seq: u32,
    pub timestamp_ms: u64,
    pub value: f64,
}

impl SensorReading {
    pub fn new(
        node_id: NodeId,
        sensor_type: SensorType,
        seq: u32,
        timestamp_ms: u64,
        value: f64,
    ) -> Result<Self, ReadingError> {
        if !is_valid_value(value) {
            return Err(ReadingError::InvalidValue(value));
        }
        Ok(SensorReading {
            node_id,
            sensor_type,
            seq,
            timestamp_ms,
            value,
        })
    }

    pub fn key(&self) -> SensorKey {
        SensorKey::new(self.node_id.clone(), self.sensor_type)
    }
}

pub fn is_valid_value(value: f64) -> bool {
    value.is_finite() && value.abs() <= MAX_ABS_VALUE
}

/// Renders a value with at most six fractional digits and no trailing zeros,
/// e.g. `25.5`, `0`, `-3.125`.
pub fn format_value(value: f64) -> String {
    let mut s = format!("{value:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}
