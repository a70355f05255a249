//! Xie-Beni validity index and cluster-count selection.

use serde::{Deserialize, Serialize};

use super::gmm::{fit_gmm, ClusterModel, MembershipMatrix};
use super::{GazeError, Point};

pub const DEFAULT_K_RANGE: std::ops::RangeInclusive<usize> = 2..=10;

/// `Σᵢ Σⱼ u²ᵢⱼ ‖xⱼ − vᵢ‖² / (n · min_{p≠q} ‖v_p − v_q‖²)`. Lower is better.
pub fn xie_beni(
    points: &[Point],
    model: &ClusterModel,
    memberships: &MembershipMatrix,
) -> Result<f64, GazeError> {
    let k = model.k();
    if k < 2 {
        return Err(GazeError::SeparationUndefined);
    }
    if memberships.len() != points.len() || memberships.iter().any(|r| r.len() != k) {
        return Err(GazeError::InvalidInput(format!(
            "membership matrix must be {} x {k}",
            points.len()
        )));
    }
    if points.is_empty() {
        return Err(GazeError::InsufficientData("no points".into()));
    }
    let mut min_sep = f64::INFINITY;
    for p in 0..k {
        for q in p + 1..k {
            let a = model.means[p];
            let b = model.means[q];
            min_sep = min_sep.min((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
        }
    }
    if min_sep == 0.0 {
        return Err(GazeError::DegenerateSeparation);
    }
    let mut compactness = 0.0;
    for (x, row) in points.iter().zip(memberships) {
        for (u, v) in row.iter().zip(&model.means) {
            compactness += u * u * ((x[0] - v[0]).powi(2) + (x[1] - v[1]).powi(2));
        }
    }
    Ok(compactness / (points.len() as f64 * min_sep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    /// `None` when the fit produced coincident centers.
    pub xb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalClusters {
    pub k_star: usize,
    pub scores: Vec<KScore>,
    pub model: ClusterModel,
}

/// Fits a mixture for every k in `k_range` and keeps the one with the lowest
/// Xie-Beni score, preferring the smaller k on ties.
pub fn optimal_clusters(
    points: &[Point],
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<OptimalClusters, GazeError> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 2 || hi < lo {
        return Err(GazeError::InvalidInput(format!("k range {lo}..={hi} must start at 2 or more")));
    }
    if points.len() < hi {
        return Err(GazeError::InsufficientData(format!(
            "{} points cannot support up to {hi} clusters",
            points.len()
        )));
    }
    let mut scores = Vec::new();
    let mut best: Option<(f64, ClusterModel)> = None;
    for k in k_range {
        let (model, resp) = fit_gmm(points, k, seed)?;
        let xb = match xie_beni(points, &model, &resp) {
            Ok(v) => Some(v),
            Err(GazeError::DegenerateSeparation) => None,
            Err(e) => return Err(e),
        };
        let score = xb.unwrap_or(f64::INFINITY);
        let better = match &best {
            None => true,
            Some((b, _)) => score < *b,
        };
        if better {
            best = Some((score, model));
        }
        scores.push(KScore { k, xb });
    }
    let (_, model) = best.expect("non-empty k range");
    Ok(OptimalClusters {
        k_star: model.k(),
        scores,
        model,
    })
}
