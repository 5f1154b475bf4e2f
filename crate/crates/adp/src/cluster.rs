//! Lloyd's k-means with k-means++ seeding.
//!
//! Aspect grouping only needs a plain squared-Euclidean k-means, but it
//! needs it deterministic: every restart derives its RNG from
//! `seed + restart_index`, assignment ties go to the lowest center index,
//! and empty clusters are repaired by reassigning the point farthest from
//! its own center rather than re-seeding. The run with the lowest final
//! objective wins; on ties the earlier restart is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many clusters to form from K support shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPolicy {
    /// Always `k`, capped at the support count.
    Fixed(usize),
    /// `round(sqrt(K))`, capped at the support count.
    SqrtRule,
    /// Mean-silhouette selection over k in [2, min(K-1, 6)]; one cluster
    /// when K < 4.
    Silhouette,
}

/// Clustering configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub k_policy: KPolicy,
    pub max_iter: usize,
    /// Relative objective-change threshold that ends Lloyd iteration.
    pub tol: f64,
    pub seed: u64,
    /// Independent k-means++ restarts; best objective wins.
    pub restarts: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k_policy: KPolicy::SqrtRule,
            max_iter: 100,
            tol: 1e-6,
            seed: 0,
            restarts: 8,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if let KPolicy::Fixed(k) = self.k_policy {
            if k < 1 {
                return Err(Error::invalid("fixed cluster count must be at least 1"));
            }
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if self.restarts < 1 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return Err(Error::invalid(format!(
                "tol must be finite and >= 0, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Same configuration with a different seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same configuration with a different policy.
    pub fn with_policy(mut self, policy: KPolicy) -> Self {
        self.k_policy = policy;
        self
    }
}

/// Result of one clustering call.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOutcome {
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// One center per cluster, all non-empty.
    pub centers: Vec<Vec<f64>>,
    /// Final sum of squared distances to assigned centers.
    pub objective: f64,
    /// Objective after each Lloyd iteration of the winning restart;
    /// non-increasing.
    pub objective_trace: Vec<f64>,
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Clusters the embeddings into `k` groups.
pub fn cluster_supports(
    embeddings: &[Vec<f64>],
    k: usize,
    cfg: &ClusterConfig,
) -> Result<KMeansOutcome> {
    cfg.validate()?;
    let n = embeddings.len();
    if k < 1 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {n} available samples"
        )));
    }
    let dim = embeddings[0].len();
    if embeddings.iter().any(|e| e.len() != dim) {
        return Err(Error::invalid("embeddings must share one dimension"));
    }

    let mut best: Option<KMeansOutcome> = None;
    for restart in 0..cfg.restarts {
        let seed = cfg.seed.wrapping_add(restart as u64);
        let outcome = lloyd_run(embeddings, k, cfg, seed);
        let better = match &best {
            None => true,
            Some(b) => outcome.objective < b.objective,
        };
        if better {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd_run(points: &[Vec<f64>], k: usize, cfg: &ClusterConfig, seed: u64) -> KMeansOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(points, k, &mut rng);
    let n = points.len();
    let mut assignments = vec![0usize; n];
    let mut trace = Vec::new();
    let mut prev_obj = f64::INFINITY;

    for _ in 0..cfg.max_iter {
        // Assignment, ties to the lowest center index.
        for (i, p) in points.iter().enumerate() {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = dist_sq(p, center);
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            assignments[i] = best_c;
        }

        repair_empty_clusters(points, &mut assignments, &centers, k);

        // Update step: centers become member means.
        let mut sums = vec![vec![0.0; points[0].len()]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (sum, &count) in sums.iter_mut().zip(&counts) {
            debug_assert!(count > 0, "empty cluster survived repair");
            for s in sum.iter_mut() {
                *s /= count as f64;
            }
        }
        centers = sums;

        let obj: f64 = points
            .iter()
            .zip(&assignments)
            .map(|(p, &a)| dist_sq(p, &centers[a]))
            .sum();
        trace.push(obj);
        if prev_obj.is_finite() && prev_obj - obj <= cfg.tol * prev_obj.max(f64::MIN_POSITIVE) {
            break;
        }
        prev_obj = obj;
    }

    KMeansOutcome {
        assignments,
        centers,
        objective: *trace.last().expect("max_iter >= 1"),
        objective_trace: trace,
    }
}

/// k-means++ seeding: first center uniform, later centers sampled with
/// probability proportional to the squared distance to the nearest chosen
/// center. When every remaining point coincides with a center, falls back
/// to a uniform draw.
fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| dist_sq(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let d = dist_sq(p, centers.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

/// Moves the point farthest from its own center into each empty cluster.
/// Only points from clusters with at least two members are candidates, so
/// the repair never empties another cluster.
fn repair_empty_clusters(
    points: &[Vec<f64>],
    assignments: &mut [usize],
    centers: &[Vec<f64>],
    k: usize,
) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut farthest: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[assignments[i]] < 2 {
                continue;
            }
            let d = dist_sq(p, &centers[assignments[i]]);
            if farthest.map_or(true, |(_, fd)| d > fd) {
                farthest = Some((i, d));
            }
        }
        let (idx, _) = farthest.expect("a cluster with two members exists");
        assignments[idx] = empty;
    }
}

/// Mean silhouette coefficient of an assignment; 0 for singleton clusters
/// and for degenerate zero-distance pairs.
pub fn mean_silhouette(points: &[Vec<f64>], assignments: &[usize], k: usize) -> f64 {
    let n = points.len();
    if n == 0 || k < 2 {
        return 0.0;
    }
    let mut counts = vec![0usize; k];
    for &a in assignments {
        counts[a] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        if counts[own] < 2 {
            continue; // s(i) = 0 for singletons
        }
        let mut sums = vec![0.0f64; k];
        for j in 0..n {
            if i == j {
                continue;
            }
            sums[assignments[j]] += dist_sq(&points[i], &points[j]).sqrt();
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue;
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}
