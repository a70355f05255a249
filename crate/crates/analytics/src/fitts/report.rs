use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    condition_summary, id_points, ls_fit, one_way_anova, participant_values, t_test,
    AnovaResult, ConditionSummary, Feedback, FitResult, FittsError, SubjectiveScore,
    SummaryOptions, TTestMode, TTestResult, TrialRecord,
};
use crate::format::mean_sd;

/// The five result columns of the feedback study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MovementTime,
    Throughput,
    Error,
    Sus,
    Tlx,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::MovementTime,
        Metric::Throughput,
        Metric::Error,
        Metric::Sus,
        Metric::Tlx,
    ];

    pub fn header(self) -> &'static str {
        match self {
            Metric::MovementTime => "Mean Movement Time (ms)",
            Metric::Throughput => "Mean Throughput (bits/sec)",
            Metric::Error => "Mean Error",
            Metric::Sus => "Mean SUS",
            Metric::Tlx => "Mean TLX",
        }
    }

    /// Whether a smaller value counts as an improvement over the baseline.
    pub fn lower_is_better(self) -> bool {
        matches!(self, Metric::MovementTime | Metric::Error | Metric::Tlx)
    }

    fn mean_decimals(self) -> usize {
        match self {
            Metric::Throughput => 3,
            _ => 2,
        }
    }

    fn cell(self, s: &ConditionSummary) -> Option<(f64, f64)> {
        match self {
            Metric::MovementTime => Some((s.mean_mt_ms, s.sd_mt_ms)),
            Metric::Throughput => Some((s.mean_throughput_bits_per_s, s.sd_throughput)),
            Metric::Error => Some((s.mean_error, s.sd_error)),
            Metric::Sus => s.mean_sus.zip(s.sd_sus),
            Metric::Tlx => s.mean_tlx.zip(s.sd_tlx),
        }
    }
}

/// Least-squares MT-vs-ID line for one condition, with the points it was
/// fitted to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitLine {
    pub feedback: Feedback,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<[f64; 2]>,
}

impl FitLine {
    pub fn new(feedback: Feedback, fit: FitResult, points: &[(f64, f64)]) -> Self {
        FitLine {
            feedback,
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            points: points.iter().map(|&(x, y)| [x, y]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub metric: Metric,
    pub a: Feedback,
    pub b: Feedback,
    #[serde(flatten)]
    pub result: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub metric: Metric,
    pub text: String,
    /// Significant improvement over the no-feedback baseline.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub feedback: Feedback,
    pub label: String,
    pub cells: Vec<TableCell>,
}

impl TableRow {
    pub fn cell(&self, metric: Metric) -> Option<&TableCell> {
        self.cells.iter().find(|c| c.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittsReport {
    pub alpha: f64,
    pub columns: Vec<String>,
    pub table: Vec<TableRow>,
    pub summaries: Vec<ConditionSummary>,
    pub fits: Vec<FitLine>,
    pub anova: BTreeMap<Metric, AnovaResult>,
    pub pairwise: Vec<PairwiseTest>,
}

impl FittsReport {
    pub fn row(&self, feedback: Feedback) -> Option<&TableRow> {
        self.table.iter().find(|r| r.feedback == feedback)
    }

    /// Plain-text rendering of the table, one tab-separated line per row.
    pub fn table_text(&self) -> String {
        let mut out = String::from("Feedback Type");
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.table {
            out.push_str(&row.label);
            for cell in &row.cells {
                out.push('\t');
                out.push_str(&cell.text);
                if cell.significant {
                    out.push('*');
                }
            }
            out.push('\n');
        }
        out
    }
}

fn improves(test: &PairwiseTest, feedback: Feedback) -> bool {
    // mean_difference is mean(a) − mean(b); orient it as condition − baseline.
    let delta = if test.a == feedback {
        test.result.mean_difference
    } else {
        -test.result.mean_difference
    };
    if test.metric.lower_is_better() {
        delta < 0.0
    } else {
        delta > 0.0
    }
}

/// Assembles the report from precomputed pieces and flags cells that are a
/// significant improvement over [`Feedback::None`] at `alpha`.
pub fn render_report(
    summaries: &[ConditionSummary],
    fits: &[FitLine],
    anova: &BTreeMap<Metric, AnovaResult>,
    ttests: &[PairwiseTest],
    alpha: f64,
) -> FittsReport {
    let mut ordered: Vec<&ConditionSummary> = summaries.iter().collect();
    ordered.sort_by_key(|s| s.feedback);
    let table = ordered
        .iter()
        .map(|s| {
            let cells = Metric::ALL
                .iter()
                .map(|&metric| {
                    let text = match metric.cell(s) {
                        Some((m, sd)) => mean_sd(m, sd, metric.mean_decimals(), 2),
                        None => "n/a".to_string(),
                    };
                    let significant = s.feedback != Feedback::None
                        && ttests.iter().any(|t| {
                            t.metric == metric
                                && ((t.a == Feedback::None && t.b == s.feedback)
                                    || (t.b == Feedback::None && t.a == s.feedback))
                                && t.result.p < alpha
                                && improves(t, s.feedback)
                        });
                    TableCell {
                        metric,
                        text,
                        significant,
                    }
                })
                .collect();
            TableRow {
                feedback: s.feedback,
                label: s.feedback.label().to_string(),
                cells,
            }
        })
        .collect();
    FittsReport {
        alpha,
        columns: Metric::ALL.iter().map(|m| m.header().to_string()).collect(),
        table,
        summaries: ordered.into_iter().cloned().collect(),
        fits: fits.to_vec(),
        anova: anova.clone(),
        pairwise: ttests.to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub alpha: f64,
    pub summary: SummaryOptions,
    pub t_test_mode: TTestMode,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            alpha: 0.05,
            summary: SummaryOptions::default(),
            t_test_mode: TTestMode::Independent,
        }
    }
}

/// Per-participant values of one metric, keyed by participant.
type MetricSamples = BTreeMap<Feedback, BTreeMap<String, f64>>;

fn metric_samples(
    trials: &[TrialRecord],
    subjective: &[SubjectiveScore],
    options: &SummaryOptions,
) -> BTreeMap<Metric, MetricSamples> {
    let mut out: BTreeMap<Metric, MetricSamples> = BTreeMap::new();
    for fb in Feedback::ALL {
        for pv in participant_values(trials, fb, options) {
            for (metric, v) in [
                (Metric::MovementTime, pv.mean_mt_ms),
                (Metric::Throughput, pv.throughput),
                (Metric::Error, pv.mean_error),
            ] {
                out.entry(metric)
                    .or_default()
                    .entry(fb)
                    .or_default()
                    .insert(pv.participant_id.clone(), v);
            }
        }
    }
    for s in subjective {
        for (metric, v) in [(Metric::Sus, s.sus), (Metric::Tlx, s.tlx)] {
            out.entry(metric)
                .or_default()
                .entry(s.feedback)
                .or_default()
                .insert(s.participant_id.clone(), v);
        }
    }
    out
}

fn pair_values(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
    mode: TTestMode,
) -> (Vec<f64>, Vec<f64>) {
    match mode {
        TTestMode::Independent => (a.values().copied().collect(), b.values().copied().collect()),
        TTestMode::Paired => a
            .iter()
            .filter_map(|(pid, x)| b.get(pid).map(|y| (*x, *y)))
            .unzip(),
    }
}

/// Computes summaries, fits, ANOVAs and the six pairwise tests per metric,
/// then renders the report.
pub fn build_report(
    trials: &[TrialRecord],
    subjective: &[SubjectiveScore],
    options: &ReportOptions,
) -> Result<FittsReport, FittsError> {
    let summaries = Feedback::ALL
        .iter()
        .map(|&fb| condition_summary(trials, subjective, fb, &options.summary))
        .collect::<Result<Vec<_>, _>>()?;

    let mut fits = Vec::new();
    for fb in Feedback::ALL {
        let points = id_points(trials, fb, &options.summary);
        match ls_fit(&points) {
            Ok(fit) => fits.push(FitLine::new(fb, fit, &points)),
            Err(e) => tracing::warn!(feedback = %fb, error = %e, "skipping fit line"),
        }
    }

    let samples = metric_samples(trials, subjective, &options.summary);
    let mut anova = BTreeMap::new();
    let mut pairwise = Vec::new();
    for (metric, by_feedback) in &samples {
        let groups: Vec<Vec<f64>> = by_feedback
            .values()
            .map(|m| m.values().copied().collect())
            .collect();
        match one_way_anova(&groups) {
            Ok(r) => {
                anova.insert(*metric, r);
            }
            Err(e) => tracing::warn!(?metric, error = %e, "skipping ANOVA"),
        }
        for (i, a) in Feedback::ALL.iter().enumerate() {
            for b in &Feedback::ALL[i + 1..] {
                let (Some(va), Some(vb)) = (by_feedback.get(a), by_feedback.get(b)) else {
                    continue;
                };
                let (xa, xb) = pair_values(va, vb, options.t_test_mode);
                match t_test(&xa, &xb, options.t_test_mode) {
                    Ok(result) => pairwise.push(PairwiseTest {
                        metric: *metric,
                        a: *a,
                        b: *b,
                        result,
                    }),
                    Err(e) => tracing::warn!(?metric, %a, %b, error = %e, "skipping t-test"),
                }
            }
        }
    }
    Ok(render_report(&summaries, &fits, &anova, &pairwise, options.alpha))
}
