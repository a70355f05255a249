//! Sensor telemetry for the factory dashboard: the UDP datagram codec,
//! per-sensor ring-buffer store, simulated nodes and threshold alerting.

pub mod alert;
pub mod clock;
pub mod codec;
pub mod pipeline;
pub mod reading;
pub mod sim;
pub mod store;

pub use codec::{decode_datagram, encode_datagram, CodecError};
pub use pipeline::{IngestReport, Pipeline, PipelineBuilder, PipelineError, StreamEvent};
pub use reading::{NodeId, SensorKey, SensorReading, SensorType};
pub use store::{IngestOutcome, SeriesPoint, SeriesSummary, Store, StoreError, TimeRange};
