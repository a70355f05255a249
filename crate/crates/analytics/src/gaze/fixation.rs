use serde::{Deserialize, Serialize};

use super::{GazeSample, Point};

pub const DEFAULT_DISPERSION_PX: f64 = 50.0;
pub const DEFAULT_MIN_DURATION_MS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub centroid: Point,
    pub start_ms: u64,
    pub duration_ms: u64,
    pub samples: usize,
}

fn dispersion(window: &[GazeSample]) -> f64 {
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in window {
        min_x = min_x.min(s.x);
        max_x = max_x.max(s.x);
        min_y = min_y.min(s.y);
        max_y = max_y.max(s.y);
    }
    (max_x - min_x) + (max_y - min_y)
}

fn span(window: &[GazeSample]) -> u64 {
    window[window.len() - 1].timestamp_ms - window[0].timestamp_ms
}

/// Dispersion-threshold (I-DT) fixation detection over timestamp-ordered
/// samples. Each fixation is a maximal window whose bounding box
/// `width + height` stays within `dispersion_px` and that lasts at least
/// `min_duration_ms`.
pub fn detect_fixations(
    samples: &[GazeSample],
    dispersion_px: f64,
    min_duration_ms: u64,
) -> Vec<Fixation> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        // Smallest window covering the minimum duration.
        let mut end = start;
        while end < samples.len() && samples[end].timestamp_ms - samples[start].timestamp_ms < min_duration_ms {
            end += 1;
        }
        if end == samples.len() {
            break;
        }
        if dispersion(&samples[start..=end]) > dispersion_px {
            start += 1;
            continue;
        }
        while end + 1 < samples.len() && dispersion(&samples[start..=end + 1]) <= dispersion_px {
            end += 1;
        }
        let window = &samples[start..=end];
        let n = window.len() as f64;
        out.push(Fixation {
            centroid: [
                window.iter().map(|s| s.x).sum::<f64>() / n,
                window.iter().map(|s| s.y).sum::<f64>() / n,
            ],
            start_ms: window[0].timestamp_ms,
            duration_ms: span(window),
            samples: window.len(),
        });
        start = end + 1;
    }
    out
}
