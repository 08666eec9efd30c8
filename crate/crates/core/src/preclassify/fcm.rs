//! Fuzzy c-means on scalar data.

use super::PreclassifyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmConfig {
    pub clusters: usize,
    /// Fuzzifier, > 1.
    pub m: f64,
    pub max_iter: usize,
    /// Stop once no center moves by this much in one iteration.
    pub tol: f64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self { clusters: 3, m: 2.0, max_iter: 100, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    /// Ascending.
    pub centers: Vec<f64>,
    /// `n × c`, row-major, each row sums to one.
    pub memberships: Vec<f64>,
    /// J(u, v) at initialization and after every iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// All inputs were equal: every point sits in cluster 0 and the other
    /// clusters are empty.
    pub degenerate: bool,
}

impl FcmResult {
    pub fn clusters(&self) -> usize {
        self.centers.len()
    }

    pub fn membership_row(&self, i: usize) -> &[f64] {
        let c = self.clusters();
        &self.memberships[i * c..(i + 1) * c]
    }

    /// Index of the largest membership; ties go to the lower cluster.
    pub fn hard_label(&self, i: usize) -> usize {
        let row = self.membership_row(i);
        let mut best = 0;
        for (k, &u) in row.iter().enumerate().skip(1) {
            if u > row[best] {
                best = k;
            }
        }
        best
    }
}

/// Membership of one point given the centers. A point that coincides with
/// a center belongs to it outright.
pub fn membership_update(x: f64, centers: &[f64], m: f64, out: &mut [f64]) {
    let p = 2.0 / (m - 1.0);
    if let Some(hit) = centers.iter().position(|&v| x == v) {
        out.iter_mut().for_each(|u| *u = 0.0);
        out[hit] = 1.0;
        return;
    }
    for k in 0..centers.len() {
        let dk = (x - centers[k]).abs();
        let s: f64 = centers.iter().map(|&vj| (dk / (x - vj).abs()).powf(p)).sum();
        out[k] = 1.0 / s;
    }
}

/// Weighted means of the data under `u^m`. A cluster with no weight keeps
/// its previous center.
pub fn center_update(values: &[f64], memberships: &[f64], m: f64, previous: &[f64]) -> Vec<f64> {
    let c = previous.len();
    let mut num = vec![0.0; c];
    let mut den = vec![0.0; c];
    for (i, &x) in values.iter().enumerate() {
        for k in 0..c {
            let w = memberships[i * c + k].powf(m);
            num[k] += w * x;
            den[k] += w;
        }
    }
    (0..c).map(|k| if den[k] > 0.0 { num[k] / den[k] } else { previous[k] }).collect()
}

pub fn objective(values: &[f64], memberships: &[f64], centers: &[f64], m: f64) -> f64 {
    let c = centers.len();
    let mut j = 0.0;
    for (i, &x) in values.iter().enumerate() {
        for k in 0..c {
            let d = x - centers[k];
            j += memberships[i * c + k].powf(m) * d * d;
        }
    }
    j
}

/// Linear-interpolation quantile of already sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Centers at the `(k + ½)/c` quantiles. If repeated values make two of
/// them coincide, fall back to evenly spaced centers over the data range.
fn initial_centers(sorted: &[f64], c: usize) -> Vec<f64> {
    let q: Vec<f64> = (0..c).map(|k| quantile(sorted, (k as f64 + 0.5) / c as f64)).collect();
    if q.windows(2).all(|w| w[0] < w[1]) {
        return q;
    }
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    (0..c).map(|k| lo + (k as f64 + 0.5) / c as f64 * (hi - lo)).collect()
}

pub fn fcm(values: &[f64], cfg: &FcmConfig) -> Result<FcmResult, PreclassifyError> {
    let c = cfg.clusters;
    if c < 2 {
        return Err(PreclassifyError::InvalidConfig(format!("need at least 2 clusters, got {c}")));
    }
    if cfg.m.is_nan() || cfg.m <= 1.0 {
        return Err(PreclassifyError::InvalidConfig(format!("fuzzifier must exceed 1, got {}", cfg.m)));
    }
    if values.is_empty() {
        return Err(PreclassifyError::InvalidConfig("no values to cluster".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(PreclassifyError::InvalidConfig("non-finite value".into()));
    }

    // Work in sorted order so the floating-point summation order, and
    // therefore the result, does not depend on how the input is permuted.
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let n = sorted.len();

    if sorted[0] == sorted[n - 1] {
        let mut memberships = vec![0.0; n * c];
        for i in 0..n {
            memberships[i * c] = 1.0;
        }
        return Ok(FcmResult {
            centers: vec![sorted[0]; c],
            memberships,
            objective_trace: vec![0.0],
            iterations: 0,
            converged: true,
            degenerate: true,
        });
    }

    let mut centers = initial_centers(&sorted, c);
    let mut u = vec![0.0; n * c];
    let update_all = |centers: &[f64], u: &mut [f64]| {
        for (i, &x) in sorted.iter().enumerate() {
            membership_update(x, centers, cfg.m, &mut u[i * c..(i + 1) * c]);
        }
    };
    update_all(&centers, &mut u);
    let mut trace = vec![objective(&sorted, &u, &centers, cfg.m)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let next = center_update(&sorted, &u, cfg.m, &centers);
        let shift = next.iter().zip(&centers).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        centers = next;
        update_all(&centers, &mut u);
        trace.push(objective(&sorted, &u, &centers, cfg.m));
        iterations += 1;
        if shift < cfg.tol {
            converged = true;
            break;
        }
    }

    let mut rank: Vec<usize> = (0..c).collect();
    rank.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
    let mut memberships = vec![0.0; n * c];
    for (pos, &orig) in order.iter().enumerate() {
        for (k, &src) in rank.iter().enumerate() {
            memberships[orig * c + k] = u[pos * c + src];
        }
    }
    Ok(FcmResult {
        centers: rank.iter().map(|&k| centers[k]).collect(),
        memberships,
        objective_trace: trace,
        iterations,
        converged,
        degenerate: false,
    })
}
