//! Command-line subcommands. Each returns a [`CliError`] whose class decides
//! the process exit code.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sensordash_analytics::fitts::{
    build_report, read_subjective, read_trials, ReportOptions, TTestMode, ThroughputMode,
};
use sensordash_analytics::gaze::{
    build_gaze_report, read_events, read_gaze, sessions, ClusterInput, GazeReportOptions, Screen,
    StudyOptions,
};
use sensordash_core::clock::{Clock, SystemClock};
use sensordash_core::encode_datagram;
use sensordash_core::pipeline::read_jsonl;
use sensordash_core::sim::{spawn_node, NodeConfig, UdpEmitter};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::net::UdpSocket;

use crate::config::ServiceConfig;
use crate::service::start;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

/// Datagrams sent back to back before `replay` yields briefly, so a local
/// receiver's socket buffer is not overrun.
const REPLAY_BURST: usize = 64;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files.
    #[error("{0}")]
    Config(String),
    /// Failure while running: sockets, delivery, output files, analysis.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "sensordash", version, about = "Factory sensor dashboard service and analysis tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the UDP listener, HTTP API and alert dispatcher.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run simulated sensor nodes that send datagrams to their targets.
    Simulate {
        /// JSON node config, or an array of them.
        #[arg(long)]
        config: PathBuf,
        /// Seconds to run.
        #[arg(long)]
        duration: f64,
    },
    /// Resend persisted readings to a running service.
    Replay {
        /// JSONL file written by the persistence option.
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value = "127.0.0.1:5005")]
        target: String,
        /// Pause between datagrams; 0 sends in short bursts.
        #[arg(long, default_value_t = 0)]
        interval_ms: u64,
    },
    /// Graph-comprehension eye-tracking report.
    GazeReport(GazeArgs),
    /// Pointing-study report with regressions and significance tests.
    FittsReport(FittsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClusterMode {
    Fixations,
    Raw,
}

#[derive(Debug, Args)]
pub struct GazeArgs {
    #[arg(long)]
    pub gaze: PathBuf,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, default_value = "1366x768")]
    pub screen: String,
    /// Cluster fixation centroids or every raw gaze sample.
    #[arg(long, value_enum, default_value_t = ClusterMode::Fixations)]
    pub mode: ClusterMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TTestArg {
    Independent,
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThroughputArg {
    PerId,
    PerTrial,
}

#[derive(Debug, Args)]
pub struct FittsArgs {
    #[arg(long)]
    pub trials: PathBuf,
    #[arg(long)]
    pub subjective: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = TTestArg::Independent)]
    pub t_test: TTestArg,
    #[arg(long, value_enum, default_value_t = ThroughputArg::PerId)]
    pub throughput: ThroughputArg,
    /// Leave missed selections out of movement-time averages.
    #[arg(long)]
    pub exclude_errors: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub async fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Serve { config } => serve(&config).await,
        Command::Simulate { config, duration } => simulate(&config, duration).await,
        Command::Replay {
            file,
            target,
            interval_ms,
        } => replay(&file, &target, interval_ms).await.map(|n| {
            tracing::info!(sent = n, %target, "replay finished");
        }),
        Command::GazeReport(args) => gaze_report(&args),
        Command::FittsReport(args) => fitts_report(&args),
    }
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

async fn serve(path: &Path) -> Result<(), CliError> {
    let config = ServiceConfig::load(path).map_err(config_err)?;
    let handle = start(config).await.map_err(|e| {
        if e.is_config() {
            config_err(e)
        } else {
            runtime_err(e)
        }
    })?;
    shutdown_signal().await;
    tracing::info!("shutting down");
    handle.shutdown().await;
    Ok(())
}

/// Contents of a `simulate` config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SimulationConfig {
    One(NodeConfig),
    Many(Vec<NodeConfig>),
}

impl SimulationConfig {
    pub fn into_nodes(self) -> Vec<NodeConfig> {
        match self {
            SimulationConfig::One(n) => vec![n],
            SimulationConfig::Many(n) => n,
        }
    }
}

pub fn load_simulation(path: &Path) -> Result<Vec<NodeConfig>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let nodes = serde_json::from_str::<SimulationConfig>(&text)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?
        .into_nodes();
    if nodes.is_empty() {
        return Err(config_err("simulation config lists no nodes"));
    }
    for node in &nodes {
        node.validate().map_err(config_err)?;
    }
    Ok(nodes)
}

async fn simulate(path: &Path, duration_s: f64) -> Result<(), CliError> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(config_err("--duration must be a positive number of seconds"));
    }
    let nodes = load_simulation(path)?;
    let start_ms = SystemClock.now_ms();
    let mut handles = Vec::new();
    for node in nodes {
        let emitter = UdpEmitter::connect(&node.target_address)
            .await
            .map_err(|e| runtime_err(format!("{}: {e}", node.target_address)))?;
        let ticks = (duration_s * node.rate_hz).round() as u64;
        handles.push(spawn_node(node, start_ms, emitter, Some(ticks)).map_err(config_err)?);
    }
    let join_all = futures::future::join_all(handles.into_iter().map(|h| h.join()));
    tokio::select! {
        ticks = join_all => tracing::info!(ticks = ticks.iter().sum::<u64>(), "simulation finished"),
        _ = shutdown_signal() => tracing::info!("simulation interrupted"),
    }
    Ok(())
}

/// Sends every reading in `file` to `target` and returns how many were sent.
pub async fn replay(file: &Path, target: &str, interval_ms: u64) -> Result<usize, CliError> {
    let readings = read_jsonl(file).map_err(|e| config_err(format!("{}: {e}", file.display())))?;
    let socket = UdpSocket::bind("0.0.0.0:0").await.map_err(runtime_err)?;
    socket
        .connect(target)
        .await
        .map_err(|e| runtime_err(format!("{target}: {e}")))?;
    for (i, reading) in readings.iter().enumerate() {
        let bytes = encode_datagram(reading).map_err(config_err)?;
        socket.send(&bytes).await.map_err(runtime_err)?;
        if interval_ms > 0 {
            tokio::time::sleep(Duration::from_millis(interval_ms)).await;
        } else if (i + 1) % REPLAY_BURST == 0 {
            tokio::time::sleep(Duration::from_millis(1)).await;
        }
    }
    Ok(readings.len())
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(runtime_err)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| runtime_err(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(runtime_err)
        }
    }
}

pub fn gaze_report(args: &GazeArgs) -> Result<(), CliError> {
    let screen: Screen = args.screen.parse().map_err(config_err)?;
    let events = read_events(open(&args.events)?).map_err(config_err)?;
    let gaze = read_gaze(open(&args.gaze)?).map_err(config_err)?;
    let options = GazeReportOptions {
        screen,
        study: StudyOptions {
            cluster_input: match args.mode {
                ClusterMode::Fixations => ClusterInput::Fixations,
                ClusterMode::Raw => ClusterInput::RawSamples,
            },
            seed: args.seed,
            ..StudyOptions::default()
        },
    };
    let report = build_gaze_report(&sessions(events, gaze), &options).map_err(runtime_err)?;
    write_json(&report, args.out.as_deref())
}

pub fn fitts_report(args: &FittsArgs) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(config_err("--alpha must be in (0, 1)"));
    }
    let trials = read_trials(open(&args.trials)?).map_err(config_err)?;
    let subjective = match &args.subjective {
        Some(path) => read_subjective(open(path)?).map_err(config_err)?,
        None => Vec::new(),
    };
    let mut options = ReportOptions {
        alpha: args.alpha,
        t_test_mode: match args.t_test {
            TTestArg::Independent => TTestMode::Independent,
            TTestArg::Paired => TTestMode::Paired,
        },
        ..ReportOptions::default()
    };
    options.summary.throughput_mode = match args.throughput {
        ThroughputArg::PerId => ThroughputMode::PerId,
        ThroughputArg::PerTrial => ThroughputMode::PerTrial,
    };
    options.summary.exclude_errors = args.exclude_errors;
    let report = build_report(&trials, &subjective, &options).map_err(runtime_err)?;
    write_json(&report, args.out.as_deref())
}
