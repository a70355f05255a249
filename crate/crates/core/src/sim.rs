//! Simulated factory nodes.
//!
//! Each sensor follows `baseline + amplitude·sin(2πt/period) + noise + offsets`,
//! clamped into the sensor's physical range. A running node emits one datagram
//! per sensor per tick and accepts injected offset events between ticks.

use std::f64::consts::PI;
use std::io;
use std::net::SocketAddr;
use std::time::Duration;

use async_trait::async_trait;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::net::UdpSocket;
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::codec::encode_datagram;
use crate::reading::{NodeId, SensorReading, SensorType};

/// Full scale of the light sensor's 16-bit converter.
pub const LIGHT_MAX_LUX: f64 = 65_535.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid node configuration: {0}")]
    InvalidConfig(String),
    #[error("node has no {0} sensor")]
    UnknownSensor(SensorType),
    #[error("node is not running")]
    Stopped,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub sensor_type: SensorType,
    pub baseline: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_period")]
    pub period_s: f64,
    #[serde(default)]
    pub noise_sd: f64,
    /// Output range; defaults to the physical range of the sensor type.
    #[serde(default)]
    pub clamp: Option<[f64; 2]>,
}

fn default_period() -> f64 {
    60.0
}

fn physical_range(sensor_type: SensorType) -> [f64; 2] {
    match sensor_type {
        SensorType::Light => [0.0, LIGHT_MAX_LUX],
        SensorType::Temperature => [-40.0, 80.0],
        SensorType::Humidity => [0.0, 100.0],
        SensorType::Smoke => [0.0, 10_000.0],
        SensorType::Flood => [0.0, 1_000.0],
    }
}

impl SensorModel {
    pub fn constant(sensor_type: SensorType, baseline: f64) -> Self {
        SensorModel {
            sensor_type,
            baseline,
            amplitude: 0.0,
            period_s: default_period(),
            noise_sd: 0.0,
            clamp: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.period_s.is_finite() && self.period_s > 0.0) {
            return bad(format!("{}: period_s must be > 0", self.sensor_type));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad(format!("{}: noise_sd must be >= 0", self.sensor_type));
        }
        if !self.baseline.is_finite() || !self.amplitude.is_finite() {
            return bad(format!("{}: baseline and amplitude must be finite", self.sensor_type));
        }
        let [lo, hi] = self.effective_clamp();
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return bad(format!("{}: clamp range is empty", self.sensor_type));
        }
        Ok(())
    }

    /// Configured clamp intersected with the sensor's physical range.
    pub fn effective_clamp(&self) -> [f64; 2] {
        let [plo, phi] = physical_range(self.sensor_type);
        match self.clamp {
            Some([lo, hi]) => [lo.max(plo), hi.min(phi)],
            None => [plo, phi],
        }
    }
}

/// Value of `model` at `t` seconds with `offset` from active events added.
pub fn sample_sensor<R: Rng + ?Sized>(model: &SensorModel, t: f64, rng: &mut R, offset: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let mut value = model.baseline + offset;
    if model.amplitude != 0.0 {
        value += model.amplitude * (2.0 * PI * t / model.period_s).sin();
    }
    if model.noise_sd > 0.0 {
        // noise_sd is validated finite and positive here.
        value += Normal::new(0.0, model.noise_sd)
            .expect("valid normal")
            .sample(rng);
    }
    let [lo, hi] = model.effective_clamp();
    value.clamp(lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub node_id: NodeId,
    pub sensors: Vec<SensorModel>,
    pub target_address: String,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    /// Seed for the noise generator.
    #[serde(default)]
    pub seed: u64,
}

fn default_rate() -> f64 {
    1.0
}

impl NodeConfig {
    pub fn new(node_id: NodeId, sensors: Vec<SensorModel>, target_address: impl Into<String>) -> Self {
        NodeConfig {
            node_id,
            sensors,
            target_address: target_address.into(),
            rate_hz: default_rate(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.sensors.is_empty() {
            return Err(SimError::InvalidConfig(format!("node {} has no sensors", self.node_id)));
        }
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(SimError::InvalidConfig("rate_hz must be > 0".into()));
        }
        for (i, s) in self.sensors.iter().enumerate() {
            s.validate()?;
            if self.sensors[..i].iter().any(|o| o.sensor_type == s.sensor_type) {
                return Err(SimError::InvalidConfig(format!(
                    "node {} declares {} twice",
                    self.node_id, s.sensor_type
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ActiveEvent {
    sensor_type: SensorType,
    offset: f64,
    start_s: f64,
    end_s: f64,
}

/// Deterministic node state: advances one tick at a time.
#[derive(Debug)]
pub struct Node {
    config: NodeConfig,
    start_ms: u64,
    tick: u64,
    seqs: Vec<u32>,
    events: Vec<ActiveEvent>,
    rng: StdRng,
}

impl Node {
    pub fn new(config: NodeConfig, start_ms: u64) -> Result<Self, SimError> {
        config.validate()?;
        let rng = StdRng::seed_from_u64(config.seed);
        let seqs = vec![0; config.sensors.len()];
        Ok(Node {
            config,
            start_ms,
            tick: 0,
            seqs,
            events: Vec::new(),
            rng,
        })
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn ticks_emitted(&self) -> u64 {
        self.tick
    }

    /// Seconds since start at the next tick.
    pub fn elapsed_s(&self) -> f64 {
        self.tick as f64 / self.config.rate_hz
    }

    /// Adds `offset` to `sensor_type` for `duration_s` seconds starting at the
    /// next tick. Overlapping events sum.
    pub fn inject(&mut self, sensor_type: SensorType, offset: f64, duration_s: f64) -> Result<(), SimError> {
        if !self.config.sensors.iter().any(|s| s.sensor_type == sensor_type) {
            return Err(SimError::UnknownSensor(sensor_type));
        }
        if !offset.is_finite() || !(duration_s.is_finite() && duration_s >= 0.0) {
            return Err(SimError::InvalidConfig("event offset/duration must be finite".into()));
        }
        let start_s = self.elapsed_s();
        self.events.push(ActiveEvent {
            sensor_type,
            offset,
            start_s,
            end_s: start_s + duration_s,
        });
        Ok(())
    }

    fn offset_at(&self, sensor_type: SensorType, t: f64) -> f64 {
        self.events
            .iter()
            .filter(|e| e.sensor_type == sensor_type && e.start_s <= t && t < e.end_s)
            .map(|e| e.offset)
            .sum()
    }

    /// Produces one reading per sensor for the current tick and advances.
    pub fn next_tick(&mut self) -> Vec<SensorReading> {
        let t = self.elapsed_s();
        let timestamp_ms =
            self.start_ms + (self.tick as f64 * 1000.0 / self.config.rate_hz).round() as u64;
        self.events.retain(|e| e.end_s > t);
        let mut out = Vec::with_capacity(self.config.sensors.len());
        for i in 0..self.config.sensors.len() {
            let model = &self.config.sensors[i];
            let offset = self.offset_at(model.sensor_type, t);
            let value = sample_sensor(model, t, &mut self.rng, offset);
            let seq = self.seqs[i];
            self.seqs[i] = seq.wrapping_add(1);
            out.push(SensorReading {
                node_id: self.config.node_id.clone(),
                sensor_type: model.sensor_type,
                seq,
                timestamp_ms,
                value,
            });
        }
        self.tick += 1;
        out
    }
}

/// Datagram transport used by running nodes.
#[async_trait]
pub trait Emitter: Send {
    async fn emit(&mut self, datagram: &[u8]) -> io::Result<()>;
}

pub struct UdpEmitter {
    socket: UdpSocket,
}

impl UdpEmitter {
    pub async fn connect(target: &str) -> io::Result<Self> {
        let addr: SocketAddr = tokio::net::lookup_host(target)
            .await?
            .next()
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("cannot resolve {target}")))?;
        let bind: SocketAddr = if addr.is_ipv4() {
            "0.0.0.0:0".parse().expect("literal")
        } else {
            "[::]:0".parse().expect("literal")
        };
        let socket = UdpSocket::bind(bind).await?;
        socket.connect(addr).await?;
        Ok(UdpEmitter { socket })
    }
}

#[async_trait]
impl Emitter for UdpEmitter {
    async fn emit(&mut self, datagram: &[u8]) -> io::Result<()> {
        self.socket.send(datagram).await.map(|_| ())
    }
}

/// In-process emitter; useful for harnesses that bypass the network.
pub struct ChannelEmitter(pub mpsc::UnboundedSender<Vec<u8>>);

#[async_trait]
impl Emitter for ChannelEmitter {
    async fn emit(&mut self, datagram: &[u8]) -> io::Result<()> {
        self.0
            .send(datagram.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "receiver dropped"))
    }
}

#[derive(Debug)]
enum NodeCommand {
    Inject {
        sensor_type: SensorType,
        offset: f64,
        duration_s: f64,
    },
    Stop,
}

/// Control handle for a node running on the tokio runtime. Dropping the
/// handle stops the node.
pub struct NodeHandle {
    node_id: NodeId,
    sensors: Vec<SensorType>,
    commands: mpsc::UnboundedSender<NodeCommand>,
    task: JoinHandle<u64>,
}

impl NodeHandle {
    pub fn node_id(&self) -> &NodeId {
        &self.node_id
    }

    pub fn inject_event(&self, sensor_type: SensorType, offset: f64, duration_s: f64) -> Result<(), SimError> {
        if !self.sensors.contains(&sensor_type) {
            return Err(SimError::UnknownSensor(sensor_type));
        }
        self.commands
            .send(NodeCommand::Inject {
                sensor_type,
                offset,
                duration_s,
            })
            .map_err(|_| SimError::Stopped)
    }

    /// Stops the node and returns the number of ticks it emitted.
    pub async fn stop(self) -> u64 {
        let _ = self.commands.send(NodeCommand::Stop);
        self.join().await
    }

    /// Waits for the node to finish on its own (bounded runs).
    pub async fn join(self) -> u64 {
        self.task.await.unwrap_or(0)
    }
}

/// Starts a node emitting at `rate_hz` until stopped, or for `max_ticks`
/// ticks when given.
pub fn spawn_node<E: Emitter + 'static>(
    config: NodeConfig,
    start_ms: u64,
    emitter: E,
    max_ticks: Option<u64>,
) -> Result<NodeHandle, SimError> {
    let node = Node::new(config, start_ms)?;
    let node_id = node.config.node_id.clone();
    let sensors = node.config.sensors.iter().map(|s| s.sensor_type).collect();
    let (tx, rx) = mpsc::unbounded_channel();
    let task = tokio::spawn(run_node(node, emitter, rx, max_ticks));
    Ok(NodeHandle {
        node_id,
        sensors,
        commands: tx,
        task,
    })
}

async fn run_node<E: Emitter>(
    mut node: Node,
    mut emitter: E,
    mut commands: mpsc::UnboundedReceiver<NodeCommand>,
    max_ticks: Option<u64>,
) -> u64 {
    let period = Duration::from_secs_f64(1.0 / node.config.rate_hz);
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Burst);
    loop {
        if max_ticks.is_some_and(|max| node.tick >= max) {
            break;
        }
        tokio::select! {
            biased;
            cmd = commands.recv() => match cmd {
                Some(NodeCommand::Inject { sensor_type, offset, duration_s }) => {
                    if let Err(err) = node.inject(sensor_type, offset, duration_s) {
                        tracing::warn!(node = %node.config.node_id, %err, "rejected event");
                    }
                }
                Some(NodeCommand::Stop) | None => break,
            },
            _ = interval.tick() => {
                for reading in node.next_tick() {
                    let sent = match encode_datagram(&reading) {
                        Ok(bytes) => emitter.emit(&bytes).await,
                        Err(err) => Err(io::Error::new(io::ErrorKind::InvalidData, err)),
                    };
                    // Lost datagrams are not retried; seq gaps reveal them.
                    if let Err(err) = sent {
                        tracing::warn!(node = %node.config.node_id, seq = reading.seq, %err, "emit failed");
                    }
                }
            }
        }
    }
    node.tick
}
