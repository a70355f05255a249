use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fixation::{detect_fixations, DEFAULT_DISPERSION_PX, DEFAULT_MIN_DURATION_MS};
use super::xb::optimal_clusters;
use super::{GazeError, GazeSample, Point};
use crate::format::trimmed;

pub const QUESTIONS_PER_GRAPH: usize = 5;
/// Participant id used when the input files carry no `participant_id` column.
pub const DEFAULT_PARTICIPANT: &str = "p1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphType {
    Bar,
    Line,
    Radar,
    Area,
}

impl GraphType {
    pub const ALL: [GraphType; 4] = [GraphType::Bar, GraphType::Line, GraphType::Radar, GraphType::Area];

    pub fn as_str(self) -> &'static str {
        match self {
            GraphType::Bar => "bar",
            GraphType::Line => "line",
            GraphType::Radar => "radar",
            GraphType::Area => "area",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            GraphType::Bar => "Bar",
            GraphType::Line => "Line",
            GraphType::Radar => "Radar",
            GraphType::Area => "Area",
        }
    }
}

impl fmt::Display for GraphType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphType {
    type Err = GazeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        GraphType::ALL
            .into_iter()
            .find(|g| g.as_str() == lower)
            .ok_or_else(|| GazeError::InvalidInput(format!("unknown graph type {s:?}")))
    }
}

/// One answered question and its response window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionEvent {
    pub graph_type: GraphType,
    pub question_id: String,
    pub answer: String,
    pub correct: bool,
    pub start_ms: u64,
    pub end_ms: u64,
}

impl QuestionEvent {
    pub fn response_time_s(&self) -> f64 {
        (self.end_ms - self.start_ms) as f64 / 1000.0
    }

    pub fn contains(&self, t: u64) -> bool {
        self.start_ms <= t && t <= self.end_ms
    }
}

/// Everything recorded for one participant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionLog {
    pub participant_id: String,
    pub events: Vec<QuestionEvent>,
    pub gaze: Vec<GazeSample>,
}

impl SessionLog {
    /// Requires five questions for each of the four graph types, each with a
    /// positive response time.
    pub fn validate(&self) -> Result<(), GazeError> {
        for g in GraphType::ALL {
            let n = self.events.iter().filter(|e| e.graph_type == g).count();
            if n != QUESTIONS_PER_GRAPH {
                return Err(GazeError::InvalidInput(format!(
                    "participant {}: {n} {g} questions, expected {QUESTIONS_PER_GRAPH}",
                    self.participant_id
                )));
            }
        }
        if let Some(e) = self.events.iter().find(|e| e.end_ms <= e.start_ms) {
            return Err(GazeError::InvalidInput(format!(
                "participant {}: question {} has a non-positive response time",
                self.participant_id, e.question_id
            )));
        }
        Ok(())
    }

    pub fn events_for(&self, graph: GraphType) -> impl Iterator<Item = &QuestionEvent> {
        self.events.iter().filter(move |e| e.graph_type == graph)
    }

    /// Gaze samples recorded while a question about `graph` was on screen.
    pub fn gaze_for(&self, graph: GraphType) -> Vec<GazeSample> {
        let windows: Vec<&QuestionEvent> = self.events_for(graph).collect();
        self.gaze
            .iter()
            .filter(|s| windows.iter().any(|e| e.contains(s.timestamp_ms)))
            .copied()
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct RawEvent {
    #[serde(default)]
    participant_id: Option<String>,
    graph_type: String,
    question_id: String,
    answer: String,
    correct: String,
    start_ms: u64,
    end_ms: u64,
}

#[derive(Debug, Deserialize)]
struct RawGaze {
    #[serde(default)]
    participant_id: Option<String>,
    timestamp_ms: u64,
    x: f64,
    y: f64,
}

fn parse_bool(s: &str) -> Result<bool, GazeError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Ok(true),
        "false" | "0" | "no" | "n" => Ok(false),
        other => Err(GazeError::InvalidInput(format!("expected a boolean, got {other:?}"))),
    }
}

fn participant(raw: Option<String>) -> String {
    raw.filter(|p| !p.is_empty())
        .unwrap_or_else(|| DEFAULT_PARTICIPANT.to_string())
}

/// Parses `[participant_id,]graph_type,question_id,answer,correct,start_ms,end_ms`.
pub fn read_events<R: Read>(reader: R) -> Result<BTreeMap<String, Vec<QuestionEvent>>, GazeError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out: BTreeMap<String, Vec<QuestionEvent>> = BTreeMap::new();
    for row in rdr.deserialize::<RawEvent>() {
        let raw = row?;
        out.entry(participant(raw.participant_id)).or_default().push(QuestionEvent {
            graph_type: raw.graph_type.parse()?,
            question_id: raw.question_id,
            answer: raw.answer,
            correct: parse_bool(&raw.correct)?,
            start_ms: raw.start_ms,
            end_ms: raw.end_ms,
        });
    }
    Ok(out)
}

/// Parses `[participant_id,]timestamp_ms,x,y`. Samples are sorted by time.
pub fn read_gaze<R: Read>(reader: R) -> Result<BTreeMap<String, Vec<GazeSample>>, GazeError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out: BTreeMap<String, Vec<GazeSample>> = BTreeMap::new();
    for row in rdr.deserialize::<RawGaze>() {
        let raw = row?;
        if !raw.x.is_finite() || !raw.y.is_finite() {
            return Err(GazeError::InvalidInput(format!(
                "non-finite gaze sample at {} ms",
                raw.timestamp_ms
            )));
        }
        out.entry(participant(raw.participant_id)).or_default().push(GazeSample {
            timestamp_ms: raw.timestamp_ms,
            x: raw.x,
            y: raw.y,
        });
    }
    for samples in out.values_mut() {
        samples.sort_by_key(|s| s.timestamp_ms);
    }
    Ok(out)
}

/// Joins per-participant events and gaze into session logs.
pub fn sessions(
    mut events: BTreeMap<String, Vec<QuestionEvent>>,
    mut gaze: BTreeMap<String, Vec<GazeSample>>,
) -> Vec<SessionLog> {
    let mut ids: Vec<String> = events.keys().chain(gaze.keys()).cloned().collect();
    ids.sort();
    ids.dedup();
    ids.into_iter()
        .map(|id| SessionLog {
            events: events.remove(&id).unwrap_or_default(),
            gaze: gaze.remove(&id).unwrap_or_default(),
            participant_id: id,
        })
        .collect()
}

/// What the cluster count is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterInput {
    /// Centroids from I-DT fixation detection.
    #[default]
    Fixations,
    /// Every gaze sample.
    RawSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub cluster_input: ClusterInput,
    pub dispersion_px: f64,
    pub min_duration_ms: u64,
    pub max_k: usize,
    pub seed: u64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            cluster_input: ClusterInput::Fixations,
            dispersion_px: DEFAULT_DISPERSION_PX,
            min_duration_ms: DEFAULT_MIN_DURATION_MS,
            max_k: 10,
            seed: 0,
        }
    }
}

impl StudyOptions {
    /// Points to cluster for one graph's gaze samples.
    pub fn cluster_points(&self, samples: &[GazeSample]) -> Vec<Point> {
        match self.cluster_input {
            ClusterInput::RawSamples => samples.iter().map(GazeSample::point).collect(),
            ClusterInput::Fixations => {
                detect_fixations(samples, self.dispersion_px, self.min_duration_ms)
                    .into_iter()
                    .map(|f| f.centroid)
                    .collect()
            }
        }
    }
}

/// Table-I quantities for one participant and graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    /// Correct answers, 0..=5.
    pub ca: usize,
    /// Mean response time over correct answers, seconds; undefined without any.
    pub art_s: Option<f64>,
    /// Total response time over all questions, seconds.
    pub trt_s: f64,
    /// Optimal cluster count; undefined with fewer than two gaze points.
    pub onc: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetrics {
    pub participant_id: String,
    pub graphs: BTreeMap<GraphType, GraphMetrics>,
}

/// CA, ART and TRT from the question events alone.
pub fn answer_metrics(events: &[&QuestionEvent]) -> GraphMetrics {
    let correct: Vec<f64> = events
        .iter()
        .filter(|e| e.correct)
        .map(|e| e.response_time_s())
        .collect();
    GraphMetrics {
        ca: correct.len(),
        art_s: crate::stats::mean(&correct),
        trt_s: events.iter().map(|e| e.response_time_s()).sum(),
        onc: None,
    }
}

/// Per-participant metrics for every graph type.
pub fn study_metrics(
    logs: &[SessionLog],
    options: &StudyOptions,
) -> Result<Vec<StudyMetrics>, GazeError> {
    logs.iter()
        .map(|log| {
            log.validate()?;
            let mut graphs = BTreeMap::new();
            for g in GraphType::ALL {
                let events: Vec<&QuestionEvent> = log.events_for(g).collect();
                let mut m = answer_metrics(&events);
                let points = options.cluster_points(&log.gaze_for(g));
                let max_k = options.max_k.min(points.len());
                if max_k >= 2 {
                    m.onc = Some(optimal_clusters(&points, 2..=max_k, options.seed)?.k_star);
                }
                graphs.insert(g, m);
            }
            Ok(StudyMetrics {
                participant_id: log.participant_id.clone(),
                graphs,
            })
        })
        .collect()
}

/// Cohort means for one graph type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMetrics {
    pub graph_type: GraphType,
    pub participants: usize,
    pub ca: f64,
    /// Mean over participants that have a defined ART.
    pub art_s: Option<f64>,
    pub trt_s: f64,
    /// Mean over participants that have a defined ONC.
    pub onc: Option<f64>,
}

pub fn cohort_metrics(metrics: &[StudyMetrics]) -> Vec<CohortMetrics> {
    use crate::stats::mean;
    GraphType::ALL
        .iter()
        .filter_map(|&g| {
            let rows: Vec<&GraphMetrics> = metrics.iter().filter_map(|m| m.graphs.get(&g)).collect();
            if rows.is_empty() {
                return None;
            }
            let ca: Vec<f64> = rows.iter().map(|r| r.ca as f64).collect();
            let art: Vec<f64> = rows.iter().filter_map(|r| r.art_s).collect();
            let trt: Vec<f64> = rows.iter().map(|r| r.trt_s).collect();
            let onc: Vec<f64> = rows.iter().filter_map(|r| r.onc.map(|k| k as f64)).collect();
            Some(CohortMetrics {
                graph_type: g,
                participants: rows.len(),
                ca: mean(&ca)?,
                art_s: mean(&art),
                trt_s: mean(&trt)?,
                onc: mean(&onc),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableOneRow {
    pub label: String,
    pub cells: Vec<String>,
}

/// Dependent variables by graph type, one column per graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableOne {
    pub columns: Vec<String>,
    pub rows: Vec<TableOneRow>,
}

impl TableOne {
    pub fn row(&self, label: &str) -> Option<&TableOneRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.label);
            for c in &r.cells {
                out.push('\t');
                out.push_str(c);
            }
            out.push('\n');
        }
        out
    }
}

const UNDEFINED: &str = "undefined";

/// Formats cohort metrics with two decimals and trailing zeros dropped.
pub fn render_table_one(cohort: &[CohortMetrics]) -> TableOne {
    let fmt = |v: Option<f64>| v.map_or_else(|| UNDEFINED.to_string(), |v| trimmed(v, 2));
    let row = |label: &str, f: &dyn Fn(&CohortMetrics) -> Option<f64>| TableOneRow {
        label: label.to_string(),
        cells: cohort.iter().map(|c| fmt(f(c))).collect(),
    };
    TableOne {
        columns: cohort.iter().map(|c| c.graph_type.title().to_string()).collect(),
        rows: vec![
            row("CA", &|c| Some(c.ca)),
            row("ART (secs)", &|c| c.art_s),
            row("TRT (secs)", &|c| Some(c.trt_s)),
            row("ONC", &|c| c.onc),
        ],
    }
}
