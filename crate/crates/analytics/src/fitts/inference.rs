use serde::{Deserialize, Serialize};

use super::FittsError;
use crate::stats::{f_survival, mean, t_two_tailed, variance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    #[serde(rename = "F")]
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
    pub eta_squared: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
}

/// Independent-groups one-way ANOVA.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<AnovaResult, FittsError> {
    if groups.len() < 2 {
        return Err(FittsError::InsufficientData(format!(
            "ANOVA needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(i) = groups.iter().position(|g| g.len() < 2) {
        return Err(FittsError::InsufficientData(format!(
            "group {i} has {} values; at least 2 required",
            groups[i].len()
        )));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g).expect("checked non-empty");
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let ss_total: f64 = groups.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let df_between = groups.len() - 1;
    let df_within = n - groups.len();
    let (f, p) = if ss_between == 0.0 && ss_within == 0.0 {
        (0.0, 1.0)
    } else if ss_within == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, f_survival(f, df_between as f64, df_within as f64))
    };
    let eta_squared = if ss_total == 0.0 {
        0.0
    } else {
        (ss_between / ss_total).clamp(0.0, 1.0)
    };
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p,
        eta_squared,
        ss_between,
        ss_within,
        ss_total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestMode {
    /// Student's t with pooled variance.
    #[default]
    Independent,
    /// One-sample t on the differences `a − b`.
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// `mean(a) − mean(b)`.
    pub mean_difference: f64,
}

/// Two-tailed t-test of `a` against `b`.
pub fn t_test(a: &[f64], b: &[f64], mode: TTestMode) -> Result<TTestResult, FittsError> {
    let (diff, se, df) = match mode {
        TTestMode::Independent => {
            if a.len() < 2 || b.len() < 2 {
                return Err(FittsError::InsufficientData(format!(
                    "independent t-test needs 2+ values per group, got {} and {}",
                    a.len(),
                    b.len()
                )));
            }
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * variance(a).unwrap_or(0.0)
                + (nb - 1.0) * variance(b).unwrap_or(0.0))
                / df;
            let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
            (mean(a).unwrap_or(0.0) - mean(b).unwrap_or(0.0), se, df)
        }
        TTestMode::Paired => {
            if a.len() != b.len() {
                return Err(FittsError::Shape(format!(
                    "paired t-test needs equal lengths, got {} and {}",
                    a.len(),
                    b.len()
                )));
            }
            if a.len() < 2 {
                return Err(FittsError::InsufficientData(
                    "paired t-test needs at least 2 pairs".into(),
                ));
            }
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let n = d.len() as f64;
            let se = (variance(&d).unwrap_or(0.0) / n).sqrt();
            (mean(&d).unwrap_or(0.0), se, n - 1.0)
        }
    };
    let (t, p) = if se == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(diff), 0.0)
        }
    } else {
        let t = diff / se;
        (t, t_two_tailed(t, df))
    };
    Ok(TTestResult {
        t,
        df,
        p,
        mean_difference: diff,
    })
}
