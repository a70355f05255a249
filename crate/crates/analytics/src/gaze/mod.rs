//! Gaze analytics for the graph-comprehension study: mixture clustering with
//! Xie-Beni model selection, fixation detection, screen regions, scanpath
//! transitions and the per-graph study metrics.

pub mod fixation;
pub mod gmm;
pub mod region;
pub mod report;
pub mod study;
pub mod transitions;
pub mod xb;

pub use fixation::{detect_fixations, Fixation};
pub use gmm::{fit_gmm, ClusterModel, MembershipMatrix};
pub use region::{map_region, Region, Screen};
pub use report::{build_gaze_report, GazeReport, GazeReportOptions, GraphAnalysis};
pub use study::{
    answer_metrics, cohort_metrics, read_events, read_gaze, render_table_one, sessions,
    study_metrics, ClusterInput, CohortMetrics, GraphMetrics, GraphType, QuestionEvent,
    SessionLog, StudyMetrics, StudyOptions, TableOne,
};
pub use transitions::{mine_transitions, Transition};
pub use xb::{optimal_clusters, xie_beni, KScore, OptimalClusters};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Screen coordinates in pixels.
pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum GazeError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("Xie-Beni separation is undefined for a single cluster")]
    SeparationUndefined,
    #[error("cluster centers coincide; Xie-Beni separation is zero")]
    DegenerateSeparation,
    #[error("point ({x}, {y}) is outside the {width}x{height} screen")]
    OutOfBounds { x: f64, y: f64, width: u32, height: u32 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub timestamp_ms: u64,
    pub x: f64,
    pub y: f64,
}

impl GazeSample {
    pub fn point(&self) -> Point {
        [self.x, self.y]
    }
}
