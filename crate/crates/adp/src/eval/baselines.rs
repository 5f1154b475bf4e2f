//! Classical baselines over episode supports.
//!
//! Analogues of the usual comparison methods, trained per episode from the
//! support set alone:
//!
//! - nearest centroid on max-normalized envelopes;
//! - 1-NN under Pearson correlation distance;
//! - one-vs-rest linear classifiers trained by hinge-loss SGD
//!   (50 epochs, step 0.1/sqrt(t), L2 1e-3);
//! - 1-NN over the surrogate signature score.
//!
//! All tie-breaks are deterministic (lowest class index, then lowest
//! support index).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backend::{surrogate_score, MatchParams};
use crate::scatter::SCSignature;

/// Nearest class centroid under squared Euclidean distance.
pub fn nearest_centroid_predict(
    supports: &[(Vec<f64>, usize)],
    n_classes: usize,
    query: &[f64],
) -> usize {
    let dim = query.len();
    let mut sums = vec![vec![0.0; dim]; n_classes];
    let mut counts = vec![0usize; n_classes];
    for (x, y) in supports {
        counts[*y] += 1;
        for (s, v) in sums[*y].iter_mut().zip(x) {
            *s += v;
        }
    }
    let mut best = (0usize, f64::INFINITY);
    for c in 0..n_classes {
        if counts[c] == 0 {
            continue;
        }
        let d: f64 = sums[c]
            .iter()
            .zip(query)
            .map(|(s, q)| {
                let diff = s / counts[c] as f64 - q;
                diff * diff
            })
            .sum();
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

/// 1-nearest-neighbor under correlation distance `1 - r`.
pub fn one_nn_correlation_predict(supports: &[(Vec<f64>, usize)], query: &[f64]) -> usize {
    let mut best = (0usize, f64::INFINITY);
    for (x, y) in supports {
        let d = 1.0 - pearson(x, query);
        if d < best.1 {
            best = (*y, d);
        }
    }
    best.0
}

/// 1-nearest-neighbor by highest surrogate signature score.
pub fn one_nn_signature_predict(
    supports: &[(SCSignature, usize)],
    query: &SCSignature,
    mp: &MatchParams,
) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (sig, y) in supports {
        let s = surrogate_score(query, sig, mp);
        if best.map_or(true, |(_, bs)| s > bs) {
            best = Some((*y, s));
        }
    }
    best.map(|(y, _)| y).unwrap_or(0)
}

/// One-vs-rest linear classifiers trained by hinge-loss SGD.
#[derive(Debug, Clone)]
pub struct LinearSgdModel {
    /// Per class: weights then bias.
    weights: Vec<Vec<f64>>,
}

const SGD_EPOCHS: usize = 50;
const SGD_STEP: f64 = 0.1;
const SGD_L2: f64 = 1e-3;

/// Trains one hinge-loss linear classifier per class.
///
/// The step decays as `0.1 / sqrt(t)` over a global update counter, the L2
/// penalty shrinks the weights on every step, and the visiting order is
/// reshuffled per epoch from `seed`.
pub fn train_linear_sgd(
    supports: &[(Vec<f64>, usize)],
    n_classes: usize,
    seed: u64,
) -> LinearSgdModel {
    let dim = supports.first().map_or(0, |(x, _)| x.len());
    let mut weights = vec![vec![0.0; dim + 1]; n_classes];
    let mut order: Vec<usize> = (0..supports.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    for _ in 0..SGD_EPOCHS {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let lr = SGD_STEP / (t as f64).sqrt();
            let (x, label) = &supports[i];
            for (c, w) in weights.iter_mut().enumerate() {
                let y = if c == *label { 1.0 } else { -1.0 };
                let margin = y * score(w, x);
                for wj in w.iter_mut() {
                    *wj *= 1.0 - lr * SGD_L2;
                }
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(x) {
                        *wj += lr * y * xj;
                    }
                    w[dim] += lr * y;
                }
            }
        }
    }
    LinearSgdModel { weights }
}

fn score(w: &[f64], x: &[f64]) -> f64 {
    let dim = x.len();
    w[..dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[dim]
}

impl LinearSgdModel {
    /// Highest-scoring class; ties go to the lower index.
    pub fn predict(&self, query: &[f64]) -> usize {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (c, w) in self.weights.iter().enumerate() {
            let s = score(w, query);
            if s > best.1 {
                best = (c, s);
            }
        }
        best.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scatter::ScatteringCenter;
    use rand::Rng;

    /// Per-class random patterns in [0, 1]^8 plus noise, matching the scale
    /// of max-normalized envelope embeddings. The patterns depend only on
    /// `pattern_seed`, so train and test splits share class geometry.
    fn blobs(
        n_per: usize,
        n_classes: usize,
        spread: f64,
        pattern_seed: u64,
        noise_seed: u64,
    ) -> Vec<(Vec<f64>, usize)> {
        let mut out = Vec::new();
        for label in 0..n_classes {
            let mut pattern_rng = ChaCha8Rng::seed_from_u64(pattern_seed ^ (label as u64 * 977));
            let pattern: Vec<f64> = (0..8).map(|_| pattern_rng.random_range(0.0..1.0)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed + 31 * label as u64 + 1);
            for _ in 0..n_per {
                let x: Vec<f64> = pattern
                    .iter()
                    .map(|p| p + rng.random_range(-spread..spread))
                    .collect();
                out.push((x, label));
            }
        }
        out
    }

    #[test]
    fn centroid_recovers_separated_blobs() {
        let train = blobs(10, 3, 0.05, 1, 10);
        let test = blobs(5, 3, 0.05, 1, 20);
        for (x, y) in &test {
            assert_eq!(nearest_centroid_predict(&train, 3, x), *y);
        }
    }

    #[test]
    fn one_nn_correlation_matches_shape_not_scale() {
        // Class 0 ramps up, class 1 ramps down; scale must not matter.
        let supports = vec![
            (vec![0.0, 1.0, 2.0, 3.0], 0),
            (vec![3.0, 2.0, 1.0, 0.0], 1),
        ];
        assert_eq!(
            one_nn_correlation_predict(&supports, &[0.0, 10.0, 20.0, 30.0]),
            0
        );
        assert_eq!(
            one_nn_correlation_predict(&supports, &[30.0, 20.0, 10.0, 0.0]),
            1
        );
    }

    #[test]
    fn sgd_separates_linearly_separable_blobs() {
        let train = blobs(20, 3, 0.08, 3, 30);
        let model = train_linear_sgd(&train, 3, 7);
        let test = blobs(10, 3, 0.08, 3, 40);
        let correct = test
            .iter()
            .filter(|(x, y)| model.predict(x) == *y)
            .count();
        assert!(correct >= 28, "only {correct}/30 correct");
    }

    #[test]
    fn sgd_is_deterministic_under_seed() {
        let train = blobs(10, 2, 0.1, 5, 50);
        let a = train_linear_sgd(&train, 2, 9);
        let b = train_linear_sgd(&train, 2, 9);
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn signature_nn_picks_the_matching_support() {
        let sig = |pairs: &[(usize, f64)]| {
            SCSignature::new(
                pairs
                    .iter()
                    .map(|&(range_index, amplitude)| ScatteringCenter {
                        range_index,
                        amplitude,
                    })
                    .collect(),
                306,
            )
            .unwrap()
        };
        let supports = vec![
            (sig(&[(50, 1.0), (70, 0.5)]), 0),
            (sig(&[(150, 1.0), (170, 0.5)]), 1),
        ];
        let q = sig(&[(151, 1.0), (169, 0.5)]);
        assert_eq!(
            one_nn_signature_predict(&supports, &q, &MatchParams::default()),
            1
        );
    }
}
