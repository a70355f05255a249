//! UDP listener feeding datagrams into the pipeline.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use sensordash_core::{IngestOutcome, Pipeline};
use serde::{Deserialize, Serialize};
use tokio::net::UdpSocket;
use tokio::sync::watch;

/// Datagrams are capped at 128 bytes; anything longer is read in full so it
/// can be rejected as oversized rather than silently truncated.
const RECV_BUFFER: usize = 2048;

#[derive(Debug, Default)]
pub struct UdpStats {
    received: AtomicU64,
    rejected: AtomicU64,
    duplicates: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UdpCounts {
    pub received: u64,
    pub rejected: u64,
    pub duplicates: u64,
}

impl UdpStats {
    pub fn snapshot(&self) -> UdpCounts {
        UdpCounts {
            received: self.received.load(Ordering::Relaxed),
            rejected: self.rejected.load(Ordering::Relaxed),
            duplicates: self.duplicates.load(Ordering::Relaxed),
        }
    }
}

/// Receives until `shutdown` turns true. Malformed datagrams are counted and
/// logged; they never stop the listener.
pub async fn run_listener(
    socket: UdpSocket,
    pipeline: Arc<Pipeline>,
    stats: Arc<UdpStats>,
    mut shutdown: watch::Receiver<bool>,
) {
    let mut buf = vec![0u8; RECV_BUFFER];
    loop {
        tokio::select! {
            _ = shutdown.wait_for(|stop| *stop) => break,
            recv = socket.recv_from(&mut buf) => match recv {
                Ok((len, from)) => {
                    stats.received.fetch_add(1, Ordering::Relaxed);
                    match pipeline.ingest_datagram(&buf[..len]) {
                        Ok(report) if report.outcome != IngestOutcome::Stored => {
                            stats.duplicates.fetch_add(1, Ordering::Relaxed);
                        }
                        Ok(_) => {}
                        Err(err) => {
                            stats.rejected.fetch_add(1, Ordering::Relaxed);
                            tracing::debug!(%from, %err, "rejected datagram");
                        }
                    }
                }
                Err(err) => tracing::warn!(%err, "udp receive failed"),
            },
        }
    }
}
