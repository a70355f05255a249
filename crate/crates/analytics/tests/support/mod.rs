//! Independent oracles and study fixtures shared by integration tests.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use sensordash_analytics::fitts::{Feedback, SubjectiveScore, TrialRecord};
use sensordash_analytics::gaze::{GraphType, QuestionEvent, SessionLog};

/// Composite Simpson's rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Upper tail of Beta(a, b) above `u` by quadrature. With `u = sin²φ` the
/// density becomes `2 sin^(2a−1)φ cos^(2b−1)φ`, smooth on `[0, π/2]` for the
/// integer and half-integer parameters the F and t tests produce.
pub fn beta_upper_tail(u: f64, a: f64, b: f64) -> f64 {
    let g = |phi: f64| phi.sin().powf(2.0 * a - 1.0) * phi.cos().powf(2.0 * b - 1.0);
    let phi_u = u.clamp(0.0, 1.0).sqrt().asin();
    let n = 20_000;
    simpson(g, phi_u, FRAC_PI_2, n) / simpson(g, 0.0, FRAC_PI_2, n)
}

/// `P(F > f)` by quadrature over the F density.
pub fn f_survival_oracle(f: f64, d1: f64, d2: f64) -> f64 {
    // d1·F / (d1·F + d2) ~ Beta(d1/2, d2/2).
    beta_upper_tail(d1 * f / (d1 * f + d2), d1 / 2.0, d2 / 2.0)
}

/// Two-tailed Student's t p-value by quadrature. With `x = √ν·tan θ` the
/// density is proportional to `cos^(ν−1) θ` on `[0, π/2)`.
pub fn t_two_tailed_oracle(t: f64, df: f64) -> f64 {
    let g = |theta: f64| theta.cos().powf(df - 1.0);
    let theta_t = (t.abs() / df.sqrt()).atan();
    let n = 20_000;
    simpson(g, theta_t, FRAC_PI_2, n) / simpson(g, 0.0, FRAC_PI_2, n)
}

/// Brute-force one-way ANOVA: `(F, df_between, df_within, eta²)`.
pub fn anova_oracle(groups: &[Vec<f64>]) -> (f64, f64, f64, f64) {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        for v in g {
            ssw += (v - m) * (v - m);
        }
    }
    let sst: f64 = all.iter().map(|v| (v - grand) * (v - grand)).sum();
    let dfb = (groups.len() - 1) as f64;
    let dfw = (all.len() - groups.len()) as f64;
    ((ssb / dfb) / (ssw / dfw), dfb, dfw, ssb / sst)
}

/// Pooled-variance Student's t statistic and degrees of freedom.
pub fn pooled_t_oracle(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let ss = |x: &[f64]| {
        let m = mean(x);
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    };
    let df = (a.len() + b.len() - 2) as f64;
    let sp2 = (ss(a) + ss(b)) / df;
    let se = (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    ((mean(a) - mean(b)) / se, df)
}

/// Direct double-sum Xie-Beni evaluation.
pub fn xie_beni_oracle(points: &[[f64; 2]], centers: &[[f64; 2]], u: &[Vec<f64>]) -> f64 {
    let mut num = 0.0;
    for i in 0..centers.len() {
        for j in 0..points.len() {
            let dx = points[j][0] - centers[i][0];
            let dy = points[j][1] - centers[i][1];
            num += u[j][i] * u[j][i] * (dx * dx + dy * dy);
        }
    }
    let mut min_sep = f64::INFINITY;
    for p in 0..centers.len() {
        for q in 0..centers.len() {
            if p != q {
                let dx = centers[p][0] - centers[q][0];
                let dy = centers[p][1] - centers[q][1];
                min_sep = min_sep.min(dx * dx + dy * dy);
            }
        }
    }
    num / (points.len() as f64 * min_sep)
}

/// Well-separated isotropic blobs on a 1366×768 screen: `k` centers at least
/// 300 px apart, `per_cluster` points each with standard deviation 10 px.
pub fn separated_mixture(k: usize, per_cluster: usize, seed: u64) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let margin = 40.0;
    let centers = 'outer: loop {
        let mut centers: Vec<[f64; 2]> = Vec::new();
        for _ in 0..10_000 {
            let c = [rng.random_range(margin..1366.0 - margin), rng.random_range(margin..768.0 - margin)];
            if centers.iter().all(|o| ((o[0] - c[0]).powi(2) + (o[1] - c[1]).powi(2)).sqrt() >= 300.0) {
                centers.push(c);
                if centers.len() == k {
                    break 'outer centers;
                }
            }
        }
    };
    let noise = Normal::new(0.0, 10.0).unwrap();
    let mut points = Vec::with_capacity(k * per_cluster);
    for c in &centers {
        for _ in 0..per_cluster {
            points.push([c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
        }
    }
    (points, centers)
}

// Values of the dependent variables by graph type, in Bar, Line, Radar,
// Area order.
pub const TABLE_ONE_CA: [&str; 4] = ["3", "2.22", "2.11", "2.67"];
pub const TABLE_ONE_ART: [&str; 4] = ["37.33", "30.35", "39.45", "24.6"];
pub const TABLE_ONE_TRT: [&str; 4] = ["196.77", "166.35", "212.83", "155.86"];
pub const TABLE_ONE_ONC: [&str; 4] = ["4.55", "4.66", "3.55", "3.55"];
/// Cohort ONC means as printed. These are not recomputable (no gaze data).
pub const TABLE_ONE_ONC_VALUES: [f64; 4] = [4.55, 4.66, 3.55, 3.55];

/// Per graph: (correct count per participant, correct time ms, wrong times ms).
fn table_one_plan(graph: GraphType, participant: usize) -> (usize, u64, Vec<u64>) {
    match graph {
        // 9 × 3 = 27 correct.
        GraphType::Bar => (3, 37_330, vec![42_390, 42_390]),
        // 7 × 2 + 2 × 3 = 20 correct.
        GraphType::Line if participant < 7 => (2, 30_350, vec![35_217, 35_217, 35_216]),
        GraphType::Line => (3, 30_350, vec![37_650, 37_650]),
        // 8 × 2 + 1 × 3 = 19 correct.
        GraphType::Radar if participant < 8 => (2, 39_450, vec![44_643, 44_643, 44_644]),
        GraphType::Radar => (3, 39_450, vec![47_240, 47_240]),
        // 6 × 3 + 3 × 2 = 24 correct.
        GraphType::Area if participant < 6 => (3, 24_600, vec![41_030, 41_030]),
        GraphType::Area => (2, 24_600, vec![35_553, 35_553, 35_554]),
    }
}

/// Nine sessions whose cohort CA, ART and TRT equal the published table.
pub fn table_one_sessions() -> Vec<SessionLog> {
    (0..9)
        .map(|p| {
            let mut events = Vec::new();
            let mut t = 1_000u64;
            for g in GraphType::ALL {
                let (correct, correct_ms, wrong) = table_one_plan(g, p);
                let durations = std::iter::repeat_n((true, correct_ms), correct)
                    .chain(wrong.into_iter().map(|w| (false, w)));
                for (q, (ok, d)) in durations.enumerate() {
                    events.push(QuestionEvent {
                        graph_type: g,
                        question_id: format!("{g}-q{}", q + 1),
                        answer: if ok { "right".into() } else { "wrong".into() },
                        correct: ok,
                        start_ms: t,
                        end_ms: t + d,
                    });
                    t += d + 2_000;
                }
            }
            SessionLog {
                participant_id: format!("P{:02}", p + 1),
                events,
                gaze: Vec::new(),
            }
        })
        .collect()
}

/// (feedback, MT mean, MT sd, error mean, error sd, SUS mean, SUS sd, TLX
/// mean, TLX sd).
pub type CohortRow = (Feedback, f64, f64, f64, f64, f64, f64, f64, f64);

/// Table II cohort values.
pub const TABLE_TWO: [CohortRow; 4] = [
    (Feedback::None, 665.01, 94.52, 1.07, 0.28, 58.13, 12.9, 49.41, 18.1),
    (Feedback::Visual, 670.39, 96.74, 1.09, 0.28, 75.42, 14.7, 36.94, 18.1),
    (Feedback::Haptic, 613.23, 86.67, 1.06, 0.29, 65.41, 14.6, 43.26, 16.2),
    (Feedback::Multimodal, 641.65, 87.02, 1.06, 0.28, 78.33, 13.0, 30.11, 16.6),
];
/// Throughput mean and sd, fed to the report as aggregates.
pub const TABLE_TWO_THROUGHPUT: [(f64, f64); 4] = [(6.107, 0.48), (6.05, 0.53), (6.64, 0.44), (6.33, 0.52)];
pub const TABLE_TWO_MT_TEXT: [&str; 4] = ["665.01 (94.52)", "670.39 (96.74)", "613.23 (86.67)", "641.65 (87.02)"];
pub const PARTICIPANTS: usize = 12;
pub const AMPLITUDES: [f64; 3] = [1.0, 1.5, 2.0];
pub const WIDTHS: [f64; 3] = [0.05, 0.1, 0.15];

/// `n` values, half at `m + d` and half at `m − d`, whose sample mean is `m`
/// and sample standard deviation is `s` (n even).
pub fn two_point_values(m: f64, s: f64, n: usize) -> Vec<f64> {
    assert!(n.is_multiple_of(2));
    let d = s * ((n - 1) as f64 / n as f64).sqrt();
    (0..n).map(|i| if i % 2 == 0 { m + d } else { m - d }).collect()
}

/// 12 participants × 9 cells × 25 repetitions per condition. Cell means and
/// per-trial errors reproduce the published means and sds.
pub fn table_two_trials() -> Vec<TrialRecord> {
    let mut out = Vec::new();
    for &(fb, mt, mt_sd, err, err_sd, ..) in &TABLE_TWO {
        let cells = two_point_values(mt, mt_sd, PARTICIPANTS * 9);
        let errors = two_point_values(err, err_sd, PARTICIPANTS * 9 * 25);
        let mut cell = 0;
        let mut trial = 0;
        for p in 0..PARTICIPANTS {
            for a in AMPLITUDES {
                for w in WIDTHS {
                    for rep in 1..=25 {
                        out.push(TrialRecord {
                            participant_id: format!("P{:02}", p + 1),
                            feedback: fb,
                            amplitude: a,
                            width: w,
                            rep,
                            movement_time_ms: cells[cell],
                            error_distance: errors[trial],
                        });
                        trial += 1;
                    }
                    cell += 1;
                }
            }
        }
    }
    out
}

pub fn table_two_subjective() -> Vec<SubjectiveScore> {
    let mut out = Vec::new();
    for &(fb, .., sus, sus_sd, tlx, tlx_sd) in &TABLE_TWO {
        let sus_v = two_point_values(sus, sus_sd, PARTICIPANTS);
        let tlx_v = two_point_values(tlx, tlx_sd, PARTICIPANTS);
        for p in 0..PARTICIPANTS {
            out.push(SubjectiveScore {
                participant_id: format!("P{:02}", p + 1),
                feedback: fb,
                sus: sus_v[p],
                tlx: tlx_v[p],
            });
        }
    }
    out
}
