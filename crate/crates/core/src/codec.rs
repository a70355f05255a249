//! Text datagram codec for the UDP wire protocol.
//!
//! A datagram is a single ASCII line without terminator:
//!
//! ```text
//! SDV1|<node_id>|<sensor_type>|<seq>|<timestamp_ms>|<value>
//! ```
//!
//! `value` uses `.` as decimal separator and carries at most six fractional
//! digits. Datagrams longer than [`MAX_DATAGRAM_LEN`] bytes are rejected.

use thiserror::Error;

use crate::reading::{format_value, is_valid_node_id, NodeId, SensorReading, SensorType};

pub const MAGIC: &str = "SDV1";
pub const MAX_DATAGRAM_LEN: usize = 128;
const FIELD_COUNT: usize = 6;
const MAX_FRACTION_DIGITS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("unsupported datagram magic/version {0:?}")]
    Version(String),
    #[error("malformed datagram: {0}")]
    Malformed(String),
    #[error("unknown sensor type {0:?}")]
    UnknownType(String),
}

fn malformed(msg: impl Into<String>) -> CodecError {
    CodecError::Malformed(msg.into())
}

/// Encodes a reading into its wire form.
///
/// Readings built through [`SensorReading::new`] always encode within the
/// length limit; the error path only triggers for hand-assembled readings
/// with out-of-range values.
pub fn encode_datagram(reading: &SensorReading) -> Result<Vec<u8>, CodecError> {
    if !crate::reading::is_valid_value(reading.value) {
        return Err(malformed(format!("value {} cannot be encoded", reading.value)));
    }
    let line = format!(
        "{MAGIC}|{}|{}|{}|{}|{}",
        reading.node_id,
        reading.sensor_type,
        reading.seq,
        reading.timestamp_ms,
        format_value(reading.value)
    );
    if line.len() > MAX_DATAGRAM_LEN {
        return Err(malformed(format!("encoded length {} exceeds limit", line.len())));
    }
    Ok(line.into_bytes())
}

pub fn decode_datagram(bytes: &[u8]) -> Result<SensorReading, CodecError> {
    if bytes.len() > MAX_DATAGRAM_LEN {
        return Err(malformed(format!("length {} exceeds {MAX_DATAGRAM_LEN}", bytes.len())));
    }
    if !bytes.is_ascii() {
        return Err(malformed("datagram is not ASCII"));
    }
    // ASCII was checked above.
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("datagram is not UTF-8"))?;
    let fields: Vec<&str> = text.split('|').collect();
    if fields[0] != MAGIC {
        return Err(CodecError::Version(fields[0].to_string()));
    }
    if fields.len() != FIELD_COUNT {
        return Err(malformed(format!("expected {FIELD_COUNT} fields, got {}", fields.len())));
    }
    if !is_valid_node_id(fields[1]) {
        return Err(malformed(format!("bad node id {:?}", fields[1])));
    }
    let node_id = NodeId::new(fields[1]).map_err(|e| malformed(e.to_string()))?;
    let sensor_type: SensorType = fields[2]
        .parse()
        .map_err(|_| CodecError::UnknownType(fields[2].to_string()))?;
    let seq: u32 = parse_unsigned(fields[3], "seq")?;
    let timestamp_ms: u64 = parse_unsigned(fields[4], "timestamp")?;
    let value = parse_value(fields[5])?;
    SensorReading::new(node_id, sensor_type, seq, timestamp_ms, value)
        .map_err(|e| malformed(e.to_string()))
}

fn parse_unsigned<T: std::str::FromStr>(field: &str, name: &str) -> Result<T, CodecError> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(format!("{name} is not an unsigned integer: {field:?}")));
    }
    field
        .parse()
        .map_err(|_| malformed(format!("{name} out of range: {field:?}")))
}

/// Accepts `-?digits(.digits{1,6})?`. Exponents, `inf`, `NaN` and a leading
/// `+` are all rejected.
fn parse_value(field: &str) -> Result<f64, CodecError> {
    let unsigned = field.strip_prefix('-').unwrap_or(field);
    let (int_part, frac_part) = match unsigned.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (unsigned, None),
    };
    let digits_ok = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits_ok(int_part) {
        return Err(malformed(format!("value is not numeric: {field:?}")));
    }
    if let Some(frac) = frac_part {
        if !digits_ok(frac) || frac.len() > MAX_FRACTION_DIGITS {
            return Err(malformed(format!("bad fractional part: {field:?}")));
        }
    }
    let value: f64 = field
        .parse()
        .map_err(|_| malformed(format!("value is not numeric: {field:?}")))?;
    if !crate::reading::is_valid_value(value) {
        return Err(malformed(format!("value out of range: {field:?}")));
    }
    Ok(value)
}
