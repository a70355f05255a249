//! Two-dimensional Gaussian mixture fitted by expectation maximization.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{GazeError, Point};

pub const MAX_ITERATIONS: usize = 200;
pub const TOLERANCE: f64 = 1e-6;
pub const RESTARTS: u64 = 5;
/// Lower bound on covariance eigenvalues (px²). Keeps the likelihood bounded
/// when a component collapses onto one point or a line.
pub const MIN_EIGENVALUE: f64 = 1e-6;
const MIN_WEIGHT: f64 = 1e-12;

/// Responsibilities, one row per point and one column per component.
pub type MembershipMatrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub weights: Vec<f64>,
    pub means: Vec<Point>,
    /// Row-major `[[sxx, sxy], [sxy, syy]]`.
    pub covariances: Vec<[[f64; 2]; 2]>,
    pub log_likelihood: f64,
    /// Log-likelihood after each E-step, starting with the initial parameters.
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.means.len()
    }
}

struct Params {
    weights: Vec<f64>,
    means: Vec<Point>,
    covs: Vec<Spectral>,
}

/// Covariance held as eigenvalues and orthonormal eigenvectors. Densities
/// are evaluated from this form: building them from matrix entries loses
/// most significant digits to cancellation once a component is nearly flat.
#[derive(Debug, Clone, Copy)]
struct Spectral {
    values: [f64; 2],
    vectors: [Point; 2],
}

impl Spectral {
    /// Decomposes the symmetric matrix `[[a, b], [b, d]]` and raises every
    /// eigenvalue below [`MIN_EIGENVALUE`] to it. With the eigenvectors kept,
    /// that is the exact maximizer of the M-step objective over covariances
    /// with bounded eigenvalues, so EM stays monotone.
    fn floored(a: f64, b: f64, d: f64) -> Self {
        let (values, vectors) = if b == 0.0 {
            ([a, d], [[1.0, 0.0], [0.0, 1.0]])
        } else {
            let half_trace = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            let major = half_trace + disc;
            // Two candidate eigenvectors; the longer one is better conditioned.
            let (u, w) = ([b, major - a], [major - d, b]);
            let v = if u[0].hypot(u[1]) >= w[0].hypot(w[1]) { u } else { w };
            let norm = v[0].hypot(v[1]);
            let v = [v[0] / norm, v[1] / norm];
            ([major, half_trace - disc], [v, [-v[1], v[0]]])
        };
        Spectral {
            values: values.map(|l| if l >= MIN_EIGENVALUE { l } else { MIN_EIGENVALUE }),
            vectors,
        }
    }

    fn matrix(&self) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for (l, v) in self.values.iter().zip(&self.vectors) {
            for r in 0..2 {
                for c in 0..2 {
                    m[r][c] += l * v[r] * v[c];
                }
            }
        }
        m
    }
}

/// Neumaier-compensated sum, so the log-likelihood trace is not dominated by
/// rounding noise when comparing successive iterations.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Log normalizer and whitening axes of one component.
struct Component {
    log_norm: f64,
    axes: [Point; 2],
    inv_values: [f64; 2],
    mean: Point,
}

impl Component {
    fn new(log_weight: f64, mean: Point, cov: &Spectral) -> Self {
        let [l1, l2] = cov.values;
        Component {
            log_norm: log_weight - (2.0 * PI).ln() - 0.5 * (l1.ln() + l2.ln()),
            axes: cov.vectors,
            inv_values: [1.0 / l1, 1.0 / l2],
            mean,
        }
    }

    /// `ln w + ln N(p | mean, cov)`.
    fn log_weighted_density(&self, p: Point) -> f64 {
        let dx = p[0] - self.mean[0];
        let dy = p[1] - self.mean[1];
        let q: f64 = self
            .axes
            .iter()
            .zip(self.inv_values)
            .map(|(v, inv)| {
                let proj = v[0] * dx + v[1] * dy;
                proj * proj * inv
            })
            .sum();
        self.log_norm - 0.5 * q
    }
}

/// Computes responsibilities in place and returns the log-likelihood.
fn e_step(points: &[Point], params: &Params, resp: &mut MembershipMatrix) -> f64 {
    let components: Vec<Component> = (0..params.means.len())
        .map(|j| Component::new(params.weights[j].ln(), params.means[j], &params.covs[j]))
        .collect();
    let per_point = points.iter().zip(resp.iter_mut()).map(|(p, row)| {
        let mut max = f64::NEG_INFINITY;
        for (r, c) in row.iter_mut().zip(&components) {
            *r = c.log_weighted_density(*p);
            max = max.max(*r);
        }
        let sum: f64 = row.iter().map(|l| (l - max).exp()).sum();
        let lse = max + sum.ln();
        for r in row.iter_mut() {
            *r = (*r - lse).exp();
        }
        lse
    });
    compensated_sum(per_point)
}

fn m_step(points: &[Point], resp: &MembershipMatrix, params: &mut Params) {
    let n = points.len() as f64;
    for j in 0..params.means.len() {
        let nk: f64 = resp.iter().map(|r| r[j]).sum();
        if nk <= f64::MIN_POSITIVE {
            // Component owns no mass: keep its shape, floor its weight.
            params.weights[j] = MIN_WEIGHT;
            continue;
        }
        let mut mean = [0.0; 2];
        for (p, r) in points.iter().zip(resp) {
            mean[0] += r[j] * p[0];
            mean[1] += r[j] * p[1];
        }
        mean[0] /= nk;
        mean[1] /= nk;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (p, r) in points.iter().zip(resp) {
            let dx = p[0] - mean[0];
            let dy = p[1] - mean[1];
            sxx += r[j] * dx * dx;
            sxy += r[j] * dx * dy;
            syy += r[j] * dy * dy;
        }
        params.means[j] = mean;
        params.covs[j] = Spectral::floored(sxx / nk, sxy / nk, syy / nk);
        params.weights[j] = (nk / n).max(MIN_WEIGHT);
    }
    let total: f64 = params.weights.iter().sum();
    for w in &mut params.weights {
        *w /= total;
    }
}

fn sq_dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// k-means++ style seeding: first center uniform, the rest proportional to
/// squared distance from the nearest chosen center.
fn seed_means(points: &[Point], k: usize, rng: &mut StdRng) -> Vec<Point> {
    let mut means = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(*p, means[0])).collect();
    while means.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(*p, c));
        }
        means.push(c);
    }
    means
}

fn pooled_covariance(points: &[Point]) -> Spectral {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        sxx += (p[0] - mx).powi(2);
        sxy += (p[0] - mx) * (p[1] - my);
        syy += (p[1] - my).powi(2);
    }
    Spectral::floored(sxx / n, sxy / n, syy / n)
}

fn run_em(points: &[Point], k: usize, rng: &mut StdRng) -> (ClusterModel, MembershipMatrix) {
    let cov = pooled_covariance(points);
    let mut params = Params {
        weights: vec![1.0 / k as f64; k],
        means: seed_means(points, k, rng),
        covs: vec![cov; k],
    };
    let mut resp = vec![vec![0.0; k]; points.len()];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let ll = e_step(points, &params, &mut resp);
        if let Some(prev) = trace.last() {
            if (ll - prev).abs() < TOLERANCE {
                converged = true;
            }
        }
        trace.push(ll);
        if converged || iterations == MAX_ITERATIONS {
            break;
        }
        m_step(points, &resp, &mut params);
        iterations += 1;
    }
    let model = ClusterModel {
        weights: params.weights,
        means: params.means,
        covariances: params.covs.iter().map(Spectral::matrix).collect(),
        log_likelihood: *trace.last().expect("at least one E-step"),
        log_likelihood_trace: trace,
        iterations,
        converged,
    };
    (model, resp)
}

/// Fits a `k`-component mixture, keeping the best of [`RESTARTS`] seeded
/// runs by final log-likelihood.
pub fn fit_gmm(
    points: &[Point],
    k: usize,
    seed: u64,
) -> Result<(ClusterModel, MembershipMatrix), GazeError> {
    if k == 0 {
        return Err(GazeError::InsufficientData("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(GazeError::InsufficientData(format!(
            "{} points cannot support {k} clusters",
            points.len()
        )));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(GazeError::InvalidInput("non-finite gaze coordinate".into()));
    }
    let mut best: Option<(ClusterModel, MembershipMatrix)> = None;
    for restart in 0..RESTARTS {
        let mut rng = StdRng::seed_from_u64(seed.wrapping_mul(RESTARTS).wrapping_add(restart));
        let run = run_em(points, k, &mut rng);
        if best
            .as_ref()
            .is_none_or(|(b, _)| run.0.log_likelihood > b.log_likelihood)
        {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
