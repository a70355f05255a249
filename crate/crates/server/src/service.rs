//! Service lifecycle: bind, run, drain.

use std::net::SocketAddr;
use std::sync::Arc;

use sensordash_core::clock::{Clock, SystemClock};
use sensordash_core::{Pipeline, PipelineError};
use thiserror::Error;
use tokio::net::{TcpListener, UdpSocket};
use tokio::sync::watch;
use tokio::task::JoinHandle;

use crate::api::{router, AppState};
use crate::config::{ConfigError, ServiceConfig};
use crate::udp::{run_listener, UdpStats};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("pipeline: {0}")]
    Pipeline(#[from] PipelineError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
}

impl ServeError {
    /// Whether the failure stems from the configuration rather than the
    /// environment.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            ServeError::Config(_) | ServeError::Pipeline(PipelineError::Alert(_))
        )
    }
}

/// A running service. Dropping the handle leaves the tasks running; call
/// [`ServiceHandle::shutdown`] to stop and drain.
pub struct ServiceHandle {
    pub http_addr: SocketAddr,
    pub udp_addr: SocketAddr,
    pub pipeline: Arc<Pipeline>,
    pub udp_stats: Arc<UdpStats>,
    stop: watch::Sender<bool>,
    udp_task: JoinHandle<()>,
    http_task: JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    /// Stops the listeners, closes open streams and waits for queued alert
    /// deliveries to finish.
    pub async fn shutdown(self) {
        let _ = self.stop.send(true);
        let _ = self.udp_task.await;
        match self.http_task.await {
            Ok(Err(err)) => tracing::error!(%err, "http server failed"),
            Err(err) => tracing::error!(%err, "http task panicked"),
            Ok(Ok(())) => {}
        }
        self.pipeline.shutdown().await;
    }
}

pub async fn start(config: ServiceConfig) -> Result<ServiceHandle, ServeError> {
    start_with_clock(config, Arc::new(SystemClock)).await
}

pub async fn start_with_clock(
    config: ServiceConfig,
    clock: Arc<dyn Clock>,
) -> Result<ServiceHandle, ServeError> {
    config.validate()?;
    let udp_addr = config.udp_addr()?;
    let http_addr = config.http_addr()?;

    let mut builder = Pipeline::builder()
        .sinks(config.sinks.clone())
        .recipients(config.recipients.clone())
        .rules(config.rules.clone())
        .persistence_path(config.persistence_path.clone())
        .alert_log_path(config.alert_log_path.clone())
        .clock(clock);
    if let Some(capacity) = config.capacity {
        builder = builder.capacity(capacity);
    }
    let pipeline = Arc::new(builder.build()?);

    let socket = UdpSocket::bind(udp_addr)
        .await
        .map_err(|source| ServeError::Bind { addr: udp_addr, source })?;
    let listener = TcpListener::bind(http_addr)
        .await
        .map_err(|source| ServeError::Bind { addr: http_addr, source })?;
    let udp_addr = socket.local_addr().map_err(|source| ServeError::Bind { addr: udp_addr, source })?;
    let http_addr = listener
        .local_addr()
        .map_err(|source| ServeError::Bind { addr: http_addr, source })?;

    let (stop, stop_rx) = watch::channel(false);
    let udp_stats = Arc::new(UdpStats::default());
    let udp_task = tokio::spawn(run_listener(
        socket,
        pipeline.clone(),
        udp_stats.clone(),
        stop_rx.clone(),
    ));
    let app = router(AppState {
        pipeline: pipeline.clone(),
        udp: udp_stats.clone(),
        screen: config.screen,
        shutdown: stop_rx.clone(),
    });
    let mut http_stop = stop_rx;
    let http_task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = http_stop.wait_for(|stop| *stop).await;
            })
            .await
    });
    tracing::info!(%http_addr, %udp_addr, "sensordash listening");
    Ok(ServiceHandle {
        http_addr,
        udp_addr,
        pipeline,
        udp_stats,
        stop,
        udp_task,
        http_task,
    })
}
