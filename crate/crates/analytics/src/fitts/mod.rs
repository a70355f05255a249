//! Fitts' law analytics for the feedback-modality pointing study: index of
//! difficulty, throughput, per-condition summaries, regression, ANOVA,
//! t-tests and the study report.

mod inference;
mod regression;
mod report;

pub use inference::{one_way_anova, t_test, AnovaResult, TTestMode, TTestResult};
pub use regression::{ls_fit, FitResult};
pub use report::{
    build_report, render_report, FitLine, FittsReport, Metric, PairwiseTest, ReportOptions,
    TableCell, TableRow,
};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{mean, std_dev};

/// Repetitions per (participant, feedback, A, W) cell in the study design.
pub const REPS_PER_CELL: usize = 25;

/// Two IDs closer than this are the same difficulty level.
pub const ID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FittsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no trials for feedback {0}")]
    EmptyGroup(Feedback),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feedback {
    None,
    Visual,
    Haptic,
    Multimodal,
}

impl Feedback {
    pub const ALL: [Feedback; 4] = [
        Feedback::None,
        Feedback::Visual,
        Feedback::Haptic,
        Feedback::Multimodal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Feedback::None => "none",
            Feedback::Visual => "visual",
            Feedback::Haptic => "haptic",
            Feedback::Multimodal => "multimodal",
        }
    }

    /// Row label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Feedback::None => "No Feedback",
            Feedback::Visual => "Visual",
            Feedback::Haptic => "Haptic",
            Feedback::Multimodal => "Multimodal (Visual and Haptic)",
        }
    }
}

impl fmt::Display for Feedback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Feedback {
    type Err = FittsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "no_feedback" | "no-feedback" | "baseline" => Ok(Feedback::None),
            "visual" => Ok(Feedback::Visual),
            "haptic" => Ok(Feedback::Haptic),
            "multimodal" | "visual_haptic" | "visual+haptic" => Ok(Feedback::Multimodal),
            other => Err(FittsError::InvalidRecord(format!("unknown feedback {other:?}"))),
        }
    }
}

/// `log2(A/W + 1)` in bits.
pub fn index_of_difficulty(amplitude: f64, width: f64) -> Result<f64, FittsError> {
    if !(amplitude > 0.0 && amplitude.is_finite()) || !(width > 0.0 && width.is_finite()) {
        return Err(FittsError::Domain(format!(
            "amplitude and width must be positive (A={amplitude}, W={width})"
        )));
    }
    Ok((amplitude / width + 1.0).log2())
}

/// Bits per second for a mean movement time in milliseconds.
pub fn throughput(id_bits: f64, mean_mt_ms: f64) -> Result<f64, FittsError> {
    if !(mean_mt_ms > 0.0 && mean_mt_ms.is_finite()) {
        return Err(FittsError::Domain(format!("movement time must be positive, got {mean_mt_ms}")));
    }
    Ok(id_bits / (mean_mt_ms / 1000.0))
}

/// Sorted distinct IDs, merging values within [`ID_TOLERANCE`].
pub fn distinct_ids(ids: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut all: Vec<f64> = ids.into_iter().collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for id in all {
        match out.last() {
            Some(last) if (id - last).abs() <= ID_TOLERANCE => {}
            _ => out.push(id),
        }
    }
    out
}

/// Index into `levels` (from [`distinct_ids`]) matching `id`.
fn id_level(levels: &[f64], id: f64) -> usize {
    levels
        .iter()
        .position(|l| (l - id).abs() <= ID_TOLERANCE)
        .expect("id drawn from the same trial set")
}

/// One pointing movement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub participant_id: String,
    pub feedback: Feedback,
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(rename = "W")]
    pub width: f64,
    pub rep: u32,
    pub movement_time_ms: f64,
    pub error_distance: f64,
}

impl TrialRecord {
    pub fn validate(&self) -> Result<(), FittsError> {
        let bad = |m: String| Err(FittsError::InvalidRecord(m));
        if self.participant_id.is_empty() {
            return bad("empty participant id".into());
        }
        if !(self.amplitude > 0.0 && self.width > 0.0) {
            return bad(format!("{}: A and W must be positive", self.participant_id));
        }
        if !(self.movement_time_ms > 0.0 && self.movement_time_ms.is_finite()) {
            return bad(format!("{}: movement time must be positive", self.participant_id));
        }
        if !(self.error_distance >= 0.0 && self.error_distance.is_finite()) {
            return bad(format!("{}: error distance must be >= 0", self.participant_id));
        }
        Ok(())
    }

    pub fn id_bits(&self) -> f64 {
        // Validated records always have positive A and W.
        index_of_difficulty(self.amplitude, self.width).unwrap_or(f64::NAN)
    }
}

/// Post-session questionnaire scores for one participant and condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveScore {
    pub participant_id: String,
    pub feedback: Feedback,
    pub sus: f64,
    pub tlx: f64,
}

#[derive(Debug, Deserialize)]
struct RawTrial {
    participant_id: String,
    feedback: String,
    #[serde(rename = "A")]
    amplitude: f64,
    #[serde(rename = "W")]
    width: f64,
    rep: u32,
    movement_time_ms: f64,
    error_distance: f64,
}

#[derive(Debug, Deserialize)]
struct RawSubjective {
    participant_id: String,
    feedback: String,
    sus: f64,
    tlx: f64,
}

/// Parses `participant_id,feedback,A,W,rep,movement_time_ms,error_distance`.
pub fn read_trials<R: Read>(reader: R) -> Result<Vec<TrialRecord>, FittsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<RawTrial>() {
        let raw = row?;
        let trial = TrialRecord {
            participant_id: raw.participant_id,
            feedback: raw.feedback.parse()?,
            amplitude: raw.amplitude,
            width: raw.width,
            rep: raw.rep,
            movement_time_ms: raw.movement_time_ms,
            error_distance: raw.error_distance,
        };
        trial.validate()?;
        out.push(trial);
    }
    Ok(out)
}

/// Parses `participant_id,feedback,sus,tlx`.
pub fn read_subjective<R: Read>(reader: R) -> Result<Vec<SubjectiveScore>, FittsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<RawSubjective>() {
        let raw = row?;
        if !raw.sus.is_finite() || !raw.tlx.is_finite() {
            return Err(FittsError::InvalidRecord(format!(
                "{}: non-finite questionnaire score",
                raw.participant_id
            )));
        }
        out.push(SubjectiveScore {
            participant_id: raw.participant_id,
            feedback: raw.feedback.parse()?,
            sus: raw.sus,
            tlx: raw.tlx,
        });
    }
    Ok(out)
}

/// How per-participant throughput is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThroughputMode {
    /// Mean over distinct IDs of `ID / mean MT(ID)`.
    #[default]
    PerId,
    /// Mean over trials of `ID / MT`.
    PerTrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryOptions {
    pub throughput_mode: ThroughputMode,
    /// Drop trials with `error_distance > 0` from movement-time aggregates.
    pub exclude_errors: bool,
}

/// Aggregate results for one feedback condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub feedback: Feedback,
    pub participants: usize,
    pub trials: usize,
    /// Mean of per-cell mean movement times across cells and participants.
    pub mean_mt_ms: f64,
    pub sd_mt_ms: f64,
    /// Mean over participants of per-participant throughput.
    pub mean_throughput_bits_per_s: f64,
    pub sd_throughput: f64,
    /// Over all trials.
    pub mean_error: f64,
    pub sd_error: f64,
    pub mean_sus: Option<f64>,
    pub sd_sus: Option<f64>,
    pub mean_tlx: Option<f64>,
    pub sd_tlx: Option<f64>,
}

/// Per-participant values for one condition; inputs to the inferential tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantValues {
    pub participant_id: String,
    pub mean_mt_ms: f64,
    pub throughput: f64,
    pub mean_error: f64,
}

/// Trials for one feedback condition, grouped for aggregation.
struct ConditionTrials<'a> {
    by_participant: BTreeMap<&'a str, Vec<&'a TrialRecord>>,
}

impl<'a> ConditionTrials<'a> {
    fn new(trials: &'a [TrialRecord], feedback: Feedback) -> Self {
        let mut by_participant: BTreeMap<&str, Vec<&TrialRecord>> = BTreeMap::new();
        for t in trials.iter().filter(|t| t.feedback == feedback) {
            by_participant.entry(t.participant_id.as_str()).or_default().push(t);
        }
        ConditionTrials { by_participant }
    }
}

fn mt_trials<'a>(trials: &[&'a TrialRecord], options: &SummaryOptions) -> Vec<&'a TrialRecord> {
    trials
        .iter()
        .copied()
        .filter(|t| !options.exclude_errors || t.error_distance == 0.0)
        .collect()
}

/// Cell means keyed by exact (A, W) bit patterns, in sorted order.
fn cell_means(trials: &[&TrialRecord]) -> Vec<((f64, f64), f64, usize)> {
    let mut cells: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
    for t in trials {
        cells
            .entry((t.amplitude.to_bits(), t.width.to_bits()))
            .or_default()
            .push(t.movement_time_ms);
    }
    cells
        .into_iter()
        .map(|((a, w), mts)| {
            let m = mean(&mts).expect("non-empty cell");
            ((f64::from_bits(a), f64::from_bits(w)), m, mts.len())
        })
        .collect()
}

fn participant_throughput(trials: &[&TrialRecord], mode: ThroughputMode) -> Option<f64> {
    match mode {
        ThroughputMode::PerTrial => {
            let tps: Vec<f64> = trials
                .iter()
                .map(|t| t.id_bits() / (t.movement_time_ms / 1000.0))
                .collect();
            mean(&tps)
        }
        ThroughputMode::PerId => {
            let levels = distinct_ids(trials.iter().map(|t| t.id_bits()));
            let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); levels.len()];
            for t in trials {
                pooled[id_level(&levels, t.id_bits())].push(t.movement_time_ms);
            }
            let tps: Vec<f64> = levels
                .iter()
                .zip(&pooled)
                .filter_map(|(id, mts)| mean(mts).map(|mt| id / (mt / 1000.0)))
                .collect();
            mean(&tps)
        }
    }
}

/// Per-participant MT, throughput and error for `feedback`.
pub fn participant_values(
    trials: &[TrialRecord],
    feedback: Feedback,
    options: &SummaryOptions,
) -> Vec<ParticipantValues> {
    ConditionTrials::new(trials, feedback)
        .by_participant
        .into_iter()
        .filter_map(|(pid, ts)| {
            let mt = mt_trials(&ts, options);
            let cells: Vec<f64> = cell_means(&mt).into_iter().map(|(_, m, _)| m).collect();
            let errors: Vec<f64> = ts.iter().map(|t| t.error_distance).collect();
            Some(ParticipantValues {
                participant_id: pid.to_string(),
                mean_mt_ms: mean(&cells)?,
                throughput: participant_throughput(&mt, options.throughput_mode)?,
                mean_error: mean(&errors)?,
            })
        })
        .collect()
}

/// Aggregates one feedback condition.
pub fn condition_summary(
    trials: &[TrialRecord],
    subjective: &[SubjectiveScore],
    feedback: Feedback,
    options: &SummaryOptions,
) -> Result<ConditionSummary, FittsError> {
    let grouped = ConditionTrials::new(trials, feedback);
    if grouped.by_participant.is_empty() {
        return Err(FittsError::EmptyGroup(feedback));
    }
    let mut all_cell_means = Vec::new();
    let mut throughputs = Vec::new();
    let mut errors = Vec::new();
    let mut n_trials = 0;
    for (pid, ts) in &grouped.by_participant {
        n_trials += ts.len();
        errors.extend(ts.iter().map(|t| t.error_distance));
        let mt = mt_trials(ts, options);
        for ((a, w), m, n) in cell_means(&mt) {
            if n != REPS_PER_CELL {
                tracing::warn!(participant = pid, %feedback, a, w, reps = n, "cell does not have 25 repetitions");
            }
            all_cell_means.push(m);
        }
        if let Some(tp) = participant_throughput(&mt, options.throughput_mode) {
            throughputs.push(tp);
        }
    }
    let empty = || FittsError::EmptyGroup(feedback);
    let scores: Vec<&SubjectiveScore> = subjective.iter().filter(|s| s.feedback == feedback).collect();
    let sus: Vec<f64> = scores.iter().map(|s| s.sus).collect();
    let tlx: Vec<f64> = scores.iter().map(|s| s.tlx).collect();
    Ok(ConditionSummary {
        feedback,
        participants: grouped.by_participant.len(),
        trials: n_trials,
        mean_mt_ms: mean(&all_cell_means).ok_or_else(empty)?,
        sd_mt_ms: std_dev(&all_cell_means).ok_or_else(empty)?,
        mean_throughput_bits_per_s: mean(&throughputs).ok_or_else(empty)?,
        sd_throughput: std_dev(&throughputs).ok_or_else(empty)?,
        mean_error: mean(&errors).ok_or_else(empty)?,
        sd_error: std_dev(&errors).ok_or_else(empty)?,
        mean_sus: mean(&sus),
        sd_sus: std_dev(&sus),
        mean_tlx: mean(&tlx),
        sd_tlx: std_dev(&tlx),
    })
}

/// `(ID, mean MT)` points for one condition, pooling every trial at an ID
/// across participants and duplicate-ratio cells.
pub fn id_points(trials: &[TrialRecord], feedback: Feedback, options: &SummaryOptions) -> Vec<(f64, f64)> {
    let selected: Vec<&TrialRecord> = trials
        .iter()
        .filter(|t| t.feedback == feedback)
        .filter(|t| !options.exclude_errors || t.error_distance == 0.0)
        .collect();
    let levels = distinct_ids(selected.iter().map(|t| t.id_bits()));
    let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); levels.len()];
    for t in &selected {
        pooled[id_level(&levels, t.id_bits())].push(t.movement_time_ms);
    }
    levels
        .into_iter()
        .zip(pooled)
        .filter_map(|(id, mts)| mean(&mts).map(|m| (id, m)))
        .collect()
}
