use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::region::{map_region, Region, Screen};
use super::study::{
    cohort_metrics, render_table_one, study_metrics, CohortMetrics, GraphType, SessionLog,
    StudyMetrics, StudyOptions, TableOne,
};
use super::transitions::{mine_transitions, Transition};
use super::xb::{optimal_clusters, KScore};
use super::{GazeError, Point};

pub const TOP_TRANSITIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GazeReportOptions {
    pub screen: Screen,
    pub study: StudyOptions,
}

/// Pooled clustering and scanpath results for one graph type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphAnalysis {
    pub graph_type: GraphType,
    pub points: usize,
    pub k_star: Option<usize>,
    pub xb_curve: Vec<KScore>,
    pub aoi_centers: Vec<Point>,
    pub aoi_regions: Vec<String>,
    pub top_transitions: Vec<Transition<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeReport {
    pub screen: Screen,
    pub participants: Vec<String>,
    pub metrics: Vec<StudyMetrics>,
    pub cohort: Vec<CohortMetrics>,
    pub table: TableOne,
    pub graphs: Vec<GraphAnalysis>,
    /// Most frequent region transitions across every graph and participant.
    pub top_transitions: Vec<Transition<String>>,
}

/// Sums transition tables mined from separate sequences, keeping the sort
/// order of [`mine_transitions`].
fn merge(tables: impl IntoIterator<Item = Vec<Transition<Region>>>) -> Vec<Transition<String>> {
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for table in tables {
        for t in table {
            *counts.entry((t.from.label(), t.to.label())).or_default() += t.count;
        }
    }
    let mut out: Vec<Transition<String>> = counts
        .into_iter()
        .map(|((from, to), count)| Transition { from, to, count })
        .collect();
    out.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.from.cmp(&b.from))
            .then_with(|| a.to.cmp(&b.to))
    });
    out
}

/// Region sequences per question window, in viewing order.
fn region_sequences(log: &SessionLog, graph: GraphType, options: &GazeReportOptions) -> Vec<Vec<Region>> {
    log.events_for(graph)
        .map(|e| {
            let window: Vec<_> = log.gaze.iter().filter(|s| e.contains(s.timestamp_ms)).copied().collect();
            options
                .study
                .cluster_points(&window)
                .into_iter()
                // Off-screen gaze (tracker loss, glances away) has no region.
                .filter_map(|p| map_region(p, options.screen).ok())
                .collect()
        })
        .collect()
}

pub fn build_gaze_report(
    logs: &[SessionLog],
    options: &GazeReportOptions,
) -> Result<GazeReport, GazeError> {
    if logs.is_empty() {
        return Err(GazeError::InsufficientData("no sessions".into()));
    }
    let metrics = study_metrics(logs, &options.study)?;
    let cohort = cohort_metrics(&metrics);
    let table = render_table_one(&cohort);

    let mut graphs = Vec::new();
    let mut all_tables = Vec::new();
    for g in GraphType::ALL {
        let points: Vec<Point> = logs
            .iter()
            .flat_map(|l| options.study.cluster_points(&l.gaze_for(g)))
            .collect();
        let max_k = options.study.max_k.min(points.len());
        let (k_star, xb_curve, aoi_centers) = if max_k >= 2 {
            let best = optimal_clusters(&points, 2..=max_k, options.study.seed)?;
            (Some(best.k_star), best.scores, best.model.means)
        } else {
            (None, Vec::new(), Vec::new())
        };
        let aoi_regions = aoi_centers
            .iter()
            .map(|c| map_region(*c, options.screen).map_or_else(|_| "off-screen".to_string(), |r| r.label()))
            .collect();
        let mut tables = Vec::new();
        for log in logs {
            for seq in region_sequences(log, g, options) {
                tables.push(mine_transitions(&seq));
            }
        }
        all_tables.extend(tables.iter().cloned());
        let mut top = merge(tables);
        top.truncate(TOP_TRANSITIONS);
        graphs.push(GraphAnalysis {
            graph_type: g,
            points: points.len(),
            k_star,
            xb_curve,
            aoi_centers,
            aoi_regions,
            top_transitions: top,
        });
    }
    let mut top_transitions = merge(all_tables);
    top_transitions.truncate(TOP_TRANSITIONS);
    Ok(GazeReport {
        screen: options.screen,
        participants: logs.iter().map(|l| l.participant_id.clone()).collect(),
        metrics,
        cohort,
        table,
        graphs,
        top_transitions,
    })
}
