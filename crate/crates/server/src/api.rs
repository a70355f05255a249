//! HTTP/JSON routes and the server-sent event stream.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::{Stream, StreamExt};
use sensordash_analytics::fitts::{
    build_report, read_subjective, read_trials, FittsError, FittsReport, ReportOptions, TTestMode,
    ThroughputMode,
};
use sensordash_analytics::gaze::{
    build_gaze_report, read_events, read_gaze, sessions, ClusterInput, GazeError, GazeReport,
    GazeReportOptions, GraphType, Screen, StudyOptions,
};
use sensordash_core::alert::{AlertError, AlertEvent, AlertLogEntry, AlertRule, Comparator, Selection};
use sensordash_core::store::Sample;
use sensordash_core::{NodeId, Pipeline, SensorKey, SensorType, SeriesPoint, SeriesSummary, StoreError, StreamEvent, TimeRange};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, watch};

use crate::udp::UdpStats;

pub const DEFAULT_MAX_POINTS: usize = 1000;
pub const DEFAULT_LOG_LIMIT: usize = 100;
/// Upload cap for the analytics endpoints; a long eye-tracking session at
/// 60 Hz easily exceeds the default 2 MB.
const ANALYTICS_BODY_LIMIT: usize = 64 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    pub pipeline: Arc<Pipeline>,
    pub udp: Arc<UdpStats>,
    pub screen: Screen,
    /// Flips to true when the service begins shutting down; open event
    /// streams end so graceful shutdown can complete.
    pub shutdown: watch::Receiver<bool>,
}

pub fn router(state: AppState) -> Router {
    let analytics = Router::new()
        .route("/analytics/gaze", post(gaze_report))
        .route("/analytics/fitts", post(fitts_report))
        .layer(DefaultBodyLimit::max(ANALYTICS_BODY_LIMIT));
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sensors", get(list_sensors))
        .route("/sensors/{node}/{sensor}/series", get(series))
        .route("/sensors/{node}/{sensor}/summary", get(summary))
        .route("/graphs/{graph_type}", get(graph))
        .route("/alerts/rules", get(list_rules))
        .route("/alerts/rules/{id}", put(put_rule).delete(delete_rule))
        .route("/alerts/manual", post(manual_alert))
        .route("/alerts/log", get(alert_log))
        .route("/stream", get(stream))
        .merge(analytics)
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl ToString) -> Self {
        ApiError {
            status,
            message: message.to_string(),
        }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl ToString) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        let status = match err {
            StoreError::UnknownKey(_) => StatusCode::NOT_FOUND,
            StoreError::EmptyWindow { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::InvalidRange(_) => StatusCode::BAD_REQUEST,
        };
        Self::new(status, err)
    }
}

impl From<AlertError> for ApiError {
    fn from(err: AlertError) -> Self {
        let status = match err {
            AlertError::Validation(_) => StatusCode::BAD_REQUEST,
            AlertError::EmptySelection => StatusCode::NOT_FOUND,
            AlertError::Configuration(_) => StatusCode::CONFLICT,
        };
        Self::new(status, err)
    }
}

impl From<GazeError> for ApiError {
    fn from(err: GazeError) -> Self {
        let status = match err {
            GazeError::Csv(_) | GazeError::InvalidInput(_) | GazeError::OutOfBounds { .. } => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, err)
    }
}

impl From<FittsError> for ApiError {
    fn from(err: FittsError) -> Self {
        let status = match err {
            FittsError::Csv(_) | FittsError::InvalidRecord(_) | FittsError::Domain(_) => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, err)
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

fn sensor_key(node: &str, sensor: &str) -> ApiResult<SensorKey> {
    let node_id = NodeId::new(node).map_err(ApiError::bad_request)?;
    let sensor_type: SensorType = sensor.parse().map_err(ApiError::not_found)?;
    Ok(SensorKey::new(node_id, sensor_type))
}

#[derive(Debug, Default, Deserialize)]
struct WindowQuery {
    from: Option<u64>,
    to: Option<u64>,
    max_points: Option<usize>,
}

impl WindowQuery {
    fn range(&self) -> ApiResult<TimeRange> {
        Ok(TimeRange::new(self.from.unwrap_or(0), self.to.unwrap_or(u64::MAX))?)
    }

    fn max_points(&self) -> usize {
        self.max_points.unwrap_or(DEFAULT_MAX_POINTS)
    }
}

async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "status": "ok",
        "sensors": state.pipeline.store().keys().len(),
        "datagrams": state.udp.snapshot(),
    }))
}

#[derive(Debug, Serialize)]
struct SensorEntry {
    #[serde(flatten)]
    key: SensorKey,
    unit: &'static str,
    samples: usize,
    latest: Sample,
}

async fn list_sensors(State(state): State<AppState>) -> Json<Vec<SensorEntry>> {
    let store = state.pipeline.store();
    let entries = store
        .latest_all()
        .into_iter()
        .map(|(key, latest)| SensorEntry {
            unit: key.sensor_type.unit(),
            samples: store.len(&key).unwrap_or(0),
            key,
            latest,
        })
        .collect();
    Json(entries)
}

#[derive(Debug, Serialize)]
struct SeriesResponse {
    #[serde(flatten)]
    key: SensorKey,
    unit: &'static str,
    points: Vec<SeriesPoint>,
}

async fn series(
    State(state): State<AppState>,
    Path((node, sensor)): Path<(String, String)>,
    Query(q): Query<WindowQuery>,
) -> ApiResult<Json<SeriesResponse>> {
    let key = sensor_key(&node, &sensor)?;
    let points = state
        .pipeline
        .store()
        .query_series(&key, q.range()?, q.max_points())?;
    Ok(Json(SeriesResponse {
        unit: key.sensor_type.unit(),
        key,
        points,
    }))
}

#[derive(Debug, Serialize)]
struct SummaryResponse {
    #[serde(flatten)]
    key: SensorKey,
    unit: &'static str,
    #[serde(flatten)]
    summary: SeriesSummary,
}

async fn summary(
    State(state): State<AppState>,
    Path((node, sensor)): Path<(String, String)>,
    Query(q): Query<WindowQuery>,
) -> ApiResult<Json<SummaryResponse>> {
    let key = sensor_key(&node, &sensor)?;
    let summary = state.pipeline.store().summarize(&key, q.range()?)?;
    Ok(Json(SummaryResponse {
        unit: key.sensor_type.unit(),
        key,
        summary,
    }))
}

/// Threshold of an enabled rule covering a sensor, for breach coloring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub rule_id: String,
    pub comparator: Comparator,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphData {
    /// Bar and radar graphs: `{low, high, mean}` over the window, or null
    /// when the sensor has no samples in it.
    Summary { summary: Option<SeriesSummary> },
    /// Line and area graphs.
    Series { series: Vec<SeriesPoint> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSensor {
    #[serde(flatten)]
    pub key: SensorKey,
    pub unit: String,
    pub thresholds: Vec<Threshold>,
    #[serde(flatten)]
    pub data: GraphData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPayload {
    pub graph_type: GraphType,
    pub from_ms: u64,
    pub to_ms: u64,
    pub sensors: Vec<GraphSensor>,
}

async fn graph(
    State(state): State<AppState>,
    Path(graph_type): Path<String>,
    Query(q): Query<WindowQuery>,
) -> ApiResult<Json<GraphPayload>> {
    let graph_type: GraphType = graph_type.parse().map_err(ApiError::not_found)?;
    let range = q.range()?;
    let store = state.pipeline.store();
    let rules = state.pipeline.rules().rules();
    let mut sensors = Vec::new();
    for key in store.keys() {
        let thresholds = rules
            .iter()
            .filter(|r| r.enabled && r.selection.covers(&key))
            .map(|r| Threshold {
                rule_id: r.rule_id.clone(),
                comparator: r.comparator,
                threshold: r.threshold,
            })
            .collect();
        let data = match graph_type {
            GraphType::Bar | GraphType::Radar => GraphData::Summary {
                summary: match store.summarize(&key, range) {
                    Ok(s) => Some(s),
                    Err(StoreError::EmptyWindow { .. }) => None,
                    Err(e) => return Err(e.into()),
                },
            },
            GraphType::Line | GraphType::Area => GraphData::Series {
                series: store.query_series(&key, range, q.max_points())?,
            },
        };
        sensors.push(GraphSensor {
            unit: key.sensor_type.unit().to_string(),
            key,
            thresholds,
            data,
        });
    }
    Ok(Json(GraphPayload {
        graph_type,
        from_ms: range.from_ms,
        to_ms: range.to_ms,
        sensors,
    }))
}

async fn list_rules(State(state): State<AppState>) -> Json<Vec<AlertRule>> {
    Json(state.pipeline.rules().rules())
}

async fn put_rule(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<AlertRule>)> {
    let mut rule: AlertRule = parse_json(&body)?;
    if !rule.rule_id.is_empty() && rule.rule_id != id {
        return Err(ApiError::bad_request(format!(
            "rule_id {:?} does not match path {id:?}",
            rule.rule_id
        )));
    }
    rule.rule_id = id;
    rule.validate()?;
    if rule.enabled && !state.pipeline.has_sinks() {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "no alert sinks are configured; store the rule disabled or add a sink",
        ));
    }
    let engine = state.pipeline.rules();
    let existed = engine.rules().iter().any(|r| r.rule_id == rule.rule_id);
    engine.upsert_rule(rule.clone())?;
    let status = if existed { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(rule)))
}

async fn delete_rule(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    if state.pipeline.rules().remove_rule(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found(format!("no rule {id:?}")))
    }
}

#[derive(Debug, Deserialize)]
struct ManualRequest {
    selection: Selection,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManualResponse {
    pub count: usize,
    pub events: Vec<AlertEvent>,
}

async fn manual_alert(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<ManualResponse>> {
    let req: ManualRequest = parse_json(&body)?;
    let events = state.pipeline.manual_alert(&req.selection)?;
    Ok(Json(ManualResponse {
        count: events.len(),
        events,
    }))
}

#[derive(Debug, Deserialize)]
struct LogQuery {
    limit: Option<usize>,
}

async fn alert_log(State(state): State<AppState>, Query(q): Query<LogQuery>) -> Json<Vec<AlertLogEntry>> {
    Json(state.pipeline.alert_log().recent(q.limit.unwrap_or(DEFAULT_LOG_LIMIT)))
}

/// Text fields of a multipart form, keyed by field name.
async fn form_fields(mut form: Multipart) -> ApiResult<HashMap<String, Bytes>> {
    let mut fields = HashMap::new();
    while let Some(field) = form.next_field().await.map_err(ApiError::bad_request)? {
        let name = field.name().unwrap_or_default().to_string();
        let data = field.bytes().await.map_err(ApiError::bad_request)?;
        fields.insert(name, data);
    }
    Ok(fields)
}

fn required<'a>(fields: &'a HashMap<String, Bytes>, name: &str) -> ApiResult<&'a Bytes> {
    fields
        .get(name)
        .ok_or_else(|| ApiError::bad_request(format!("missing form field {name:?}")))
}

fn optional_text(fields: &HashMap<String, Bytes>, name: &str) -> ApiResult<Option<String>> {
    fields
        .get(name)
        .map(|b| {
            std::str::from_utf8(b)
                .map(|s| s.trim().to_string())
                .map_err(|_| ApiError::bad_request(format!("field {name:?} is not UTF-8")))
        })
        .transpose()
}

fn parse_field<T: std::str::FromStr>(fields: &HashMap<String, Bytes>, name: &str) -> ApiResult<Option<T>> {
    optional_text(fields, name)?
        .map(|s| {
            s.parse()
                .map_err(|_| ApiError::bad_request(format!("bad value {s:?} for {name:?}")))
        })
        .transpose()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))?
}

async fn gaze_report(State(state): State<AppState>, form: Multipart) -> ApiResult<Json<GazeReport>> {
    let fields = form_fields(form).await?;
    let gaze = required(&fields, "gaze")?.clone();
    let events = required(&fields, "events")?.clone();
    let mut options = GazeReportOptions {
        screen: parse_field(&fields, "screen")?.unwrap_or(state.screen),
        study: StudyOptions::default(),
    };
    if let Some(mode) = optional_text(&fields, "mode")? {
        options.study.cluster_input = match mode.as_str() {
            "fixations" => ClusterInput::Fixations,
            "raw" | "raw_samples" => ClusterInput::RawSamples,
            other => return Err(ApiError::bad_request(format!("unknown mode {other:?}"))),
        };
    }
    if let Some(seed) = parse_field(&fields, "seed")? {
        options.study.seed = seed;
    }
    let report = blocking(move || {
        let logs = sessions(read_events(&events[..])?, read_gaze(&gaze[..])?);
        Ok(build_gaze_report(&logs, &options)?)
    })
    .await?;
    Ok(Json(report))
}

async fn fitts_report(form: Multipart) -> ApiResult<Json<FittsReport>> {
    let fields = form_fields(form).await?;
    let trials = required(&fields, "trials")?.clone();
    let subjective = fields.get("subjective").cloned();
    let mut options = ReportOptions::default();
    if let Some(alpha) = parse_field::<f64>(&fields, "alpha")? {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ApiError::bad_request("alpha must be in (0, 1)"));
        }
        options.alpha = alpha;
    }
    if let Some(mode) = optional_text(&fields, "t_test")? {
        options.t_test_mode = match mode.as_str() {
            "independent" => TTestMode::Independent,
            "paired" => TTestMode::Paired,
            other => return Err(ApiError::bad_request(format!("unknown t_test {other:?}"))),
        };
    }
    if let Some(mode) = optional_text(&fields, "throughput")? {
        options.summary.throughput_mode = match mode.as_str() {
            "per_id" => ThroughputMode::PerId,
            "per_trial" => ThroughputMode::PerTrial,
            other => return Err(ApiError::bad_request(format!("unknown throughput {other:?}"))),
        };
    }
    if let Some(exclude) = parse_field(&fields, "exclude_errors")? {
        options.summary.exclude_errors = exclude;
    }
    let report = blocking(move || {
        let trials = read_trials(&trials[..])?;
        let subjective = match subjective {
            Some(bytes) => read_subjective(&bytes[..])?,
            None => Vec::new(),
        };
        Ok(build_report(&trials, &subjective, &options)?)
    })
    .await?;
    Ok(Json(report))
}

fn sse_event(event: &StreamEvent) -> Event {
    let data = serde_json::to_string(event).unwrap_or_default();
    match event {
        StreamEvent::Reading(_) => Event::default().event("reading").data(data),
        StreamEvent::Alert(a) => Event::default()
            .event("alert")
            .id(a.event_id.to_string())
            .data(data),
    }
}

/// Live readings and alerts. A reconnecting client sending `Last-Event-ID`
/// first receives the logged alerts it missed.
async fn stream(
    State(state): State<AppState>,
    headers: HeaderMap,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    // Subscribe before reading the log so nothing falls between the two.
    let rx = state.pipeline.subscribe();
    let last_id = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok());
    let missed: Vec<StreamEvent> = match last_id {
        Some(id) => state
            .pipeline
            .alert_log()
            .after(id)
            .into_iter()
            .map(|e| StreamEvent::Alert(e.event))
            .collect(),
        None => Vec::new(),
    };
    let replayed_up_to = missed
        .iter()
        .filter_map(|e| match e {
            StreamEvent::Alert(a) => Some(a.event_id),
            StreamEvent::Reading(_) => None,
        })
        .max()
        .or(last_id);
    let live = futures::stream::unfold(rx, move |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(StreamEvent::Alert(a)) if replayed_up_to.is_some_and(|id| a.event_id <= id) => {}
                Ok(event) => return Some((event, rx)),
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::debug!(skipped = n, "slow stream consumer skipped events");
                }
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    let mut shutdown = state.shutdown.clone();
    let stopped = async move {
        let _ = shutdown.wait_for(|stop| *stop).await;
    };
    let events = futures::stream::iter(missed)
        .chain(live)
        .map(|e| Ok(sse_event(&e)))
        .take_until(stopped);
    Sse::new(events).keep_alive(KeepAlive::default())
}
