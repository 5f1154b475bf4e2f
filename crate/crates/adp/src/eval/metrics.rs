//! Accuracy, macro-F1, and confusion bookkeeping.
//!
//! Headline numbers are episode-averaged: each episode contributes its own
//! accuracy and macro-F1, and the report averages those, which is the usual
//! few-shot convention. The pooled confusion matrix over all episodes is
//! carried alongside for inspection. An abstention (no prediction) counts
//! as an error for accuracy and as a miss for the true class in F1 — it is
//! never silently mapped to a class, and the per-class abstention counts
//! keep `row sum + abstained = queries` exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truths and predictions of one episode; `None` marks an abstention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_index: usize,
    /// Candidate classes of the episode.
    pub classes: Vec<String>,
    pub truths: Vec<String>,
    pub preds: Vec<Option<String>>,
}

/// Pooled confusion counts; `counts[t][p]` is queries of true class `t`
/// predicted as class `p`, with abstentions tallied per true class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub abstained: Vec<u64>,
}

/// Pooled one-vs-rest statistics of one class, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Evaluation summary over a set of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Episode-averaged accuracy, percent.
    pub mean_acc: f64,
    /// Episode-averaged macro-F1, percent.
    pub macro_f1: f64,
    /// Per-class statistics from the pooled confusion.
    pub per_class: Vec<ClassStats>,
    pub confusion: Confusion,
    pub abstentions: u64,
    /// Accuracy of each episode, percent.
    pub per_episode: Vec<f64>,
}

/// Accuracy and macro-F1 of one episode, in percent.
///
/// Macro-F1 averages per-class F1 = 2TP / (2TP + FP + FN) over the episode
/// classes; a class that never appears as truth or prediction is excluded
/// from the mean (with balanced queries every class has truths, so this
/// only matters for degenerate inputs).
fn episode_scores(result: &EpisodeResult) -> Result<(f64, f64)> {
    if result.truths.is_empty() {
        return Err(Error::invalid("episode has no queries"));
    }
    if result.truths.len() != result.preds.len() {
        return Err(Error::invalid(format!(
            "{} truths vs {} predictions",
            result.truths.len(),
            result.preds.len()
        )));
    }
    for t in &result.truths {
        if !result.classes.contains(t) {
            return Err(Error::invalid(format!("truth label '{t}' not a candidate")));
        }
    }
    for p in result.preds.iter().flatten() {
        if !result.classes.contains(p) {
            return Err(Error::invalid(format!(
                "predicted label '{p}' not a candidate"
            )));
        }
    }

    let total = result.truths.len();
    let correct = result
        .truths
        .iter()
        .zip(&result.preds)
        .filter(|(t, p)| p.as_deref() == Some(t.as_str()))
        .count();
    let acc = 100.0 * correct as f64 / total as f64;

    let mut f1_sum = 0.0;
    let mut f1_count = 0usize;
    for class in &result.classes {
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fn_ = 0u64;
        for (t, p) in result.truths.iter().zip(&result.preds) {
            let truth_is = t == class;
            let pred_is = p.as_deref() == Some(class.as_str());
            match (truth_is, pred_is) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        if tp + fp + fn_ == 0 {
            continue;
        }
        f1_sum += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
        f1_count += 1;
    }
    let macro_f1 = if f1_count == 0 {
        0.0
    } else {
        100.0 * f1_sum / f1_count as f64
    };
    Ok((acc, macro_f1))
}

/// Aggregates episode results into a report.
pub fn compute_metrics(results: &[EpisodeResult]) -> Result<EvalReport> {
    if results.is_empty() {
        return Err(Error::invalid("no episodes to aggregate"));
    }

    let mut per_episode = Vec::with_capacity(results.len());
    let mut f1_total = 0.0;
    for r in results {
        let (acc, f1) = episode_scores(r)?;
        per_episode.push(acc);
        f1_total += f1;
    }
    let mean_acc = per_episode.iter().sum::<f64>() / per_episode.len() as f64;
    let macro_f1 = f1_total / results.len() as f64;

    // Pooled confusion over the union of classes.
    let mut class_set: BTreeMap<&str, usize> = BTreeMap::new();
    for r in results {
        for c in &r.classes {
            let next = class_set.len();
            class_set.entry(c).or_insert(next);
        }
    }
    let classes: Vec<String> = {
        let mut v: Vec<(&str, usize)> = class_set.iter().map(|(c, i)| (*c, *i)).collect();
        v.sort_by_key(|(c, _)| c.to_string());
        v.into_iter().map(|(c, _)| c.to_string()).collect()
    };
    let index: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let n = classes.len();
    let mut counts = vec![vec![0u64; n]; n];
    let mut abstained = vec![0u64; n];
    let mut abstentions = 0u64;
    for r in results {
        for (t, p) in r.truths.iter().zip(&r.preds) {
            let ti = index[t.as_str()];
            match p {
                Some(p) => counts[ti][index[p.as_str()]] += 1,
                None => {
                    abstained[ti] += 1;
                    abstentions += 1;
                }
            }
        }
    }

    let per_class = classes
        .iter()
        .enumerate()
        .map(|(i, class)| {
            let tp = counts[i][i];
            let fp: u64 = (0..n).filter(|&r| r != i).map(|r| counts[r][i]).sum();
            let fn_: u64 =
                (0..n).filter(|&c| c != i).map(|c| counts[i][c]).sum::<u64>() + abstained[i];
            let precision = if tp + fp == 0 {
                0.0
            } else {
                100.0 * tp as f64 / (tp + fp) as f64
            };
            let recall = if tp + fn_ == 0 {
                0.0
            } else {
                100.0 * tp as f64 / (tp + fn_) as f64
            };
            let f1 = if 2 * tp + fp + fn_ == 0 {
                0.0
            } else {
                100.0 * 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
            };
            ClassStats {
                class: class.clone(),
                precision,
                recall,
                f1,
            }
        })
        .collect();

    Ok(EvalReport {
        mean_acc,
        macro_f1,
        per_class,
        confusion: Confusion {
            classes,
            counts,
            abstained,
        },
        abstentions,
        per_episode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(
        classes: &[&str],
        truths: &[&str],
        preds: &[Option<&str>],
    ) -> EpisodeResult {
        EpisodeResult {
            episode_index: 0,
            classes: classes.iter().map(|s| s.to_string()).collect(),
            truths: truths.iter().map(|s| s.to_string()).collect(),
            preds: preds.iter().map(|p| p.map(str::to_string)).collect(),
        }
    }

    #[test]
    fn perfect_predictions_are_one_hundred() {
        let r = result(
            &["a", "b", "c"],
            &["a", "b", "c", "a"],
            &[Some("a"), Some("b"), Some("c"), Some("a")],
        );
        let report = compute_metrics(&[r]).unwrap();
        assert_eq!(report.mean_acc, 100.0);
        assert_eq!(report.macro_f1, 100.0);
        assert_eq!(report.abstentions, 0);
    }

    #[test]
    fn hand_computed_confusion_case() {
        // Three classes, ten queries each; class a fully predicted as b.
        // Accuracy 20/30; per-class F1: a 0, b 2/3, c 1.
        let mut truths = Vec::new();
        let mut preds = Vec::new();
        for _ in 0..10 {
            truths.push("a");
            preds.push(Some("b"));
        }
        for _ in 0..10 {
            truths.push("b");
            preds.push(Some("b"));
        }
        for _ in 0..10 {
            truths.push("c");
            preds.push(Some("c"));
        }
        let report = compute_metrics(&[result(&["a", "b", "c"], &truths, &preds)]).unwrap();
        assert!((report.mean_acc - 100.0 * 20.0 / 30.0).abs() < 1e-9);
        let want_f1 = 100.0 * (0.0 + 2.0 / 3.0 + 1.0) / 3.0;
        assert!((report.macro_f1 - want_f1).abs() < 1e-9);
        assert_eq!(report.confusion.counts[0][1], 10);
        assert_eq!(report.confusion.counts[1][1], 10);
        assert_eq!(report.confusion.counts[2][2], 10);
    }

    #[test]
    fn abstentions_count_as_errors_and_misses() {
        let r = result(
            &["a", "b"],
            &["a", "a", "b", "b"],
            &[Some("a"), None, Some("b"), None],
        );
        let report = compute_metrics(&[r]).unwrap();
        assert_eq!(report.abstentions, 2);
        assert!((report.mean_acc - 50.0).abs() < 1e-9);
        // Per class: tp=1, fn=1 (abstained), fp=0 -> F1 = 2/3.
        for stats in &report.per_class {
            assert!((stats.f1 - 100.0 * 2.0 / 3.0).abs() < 1e-9);
        }
        // Bookkeeping identity: correct + wrong + abstained = total.
        let total: u64 = report
            .confusion
            .counts
            .iter()
            .flatten()
            .sum::<u64>()
            + report.abstentions;
        assert_eq!(total, 4);
    }

    #[test]
    fn empty_query_set_is_rejected() {
        let r = result(&["a", "b"], &[], &[]);
        assert!(compute_metrics(&[r]).is_err());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let r = result(&["a", "b"], &["a"], &[Some("a"), Some("b")]);
        assert!(compute_metrics(&[r]).is_err());
    }

    #[test]
    fn foreign_prediction_is_rejected() {
        let r = result(&["a", "b"], &["a"], &[Some("z")]);
        assert!(compute_metrics(&[r]).is_err());
    }

    #[test]
    fn episode_averaging_not_pooling() {
        // One episode at 100%, one at 0%: the average is 50 even though the
        // pooled counts are 1 of 3 correct.
        let r1 = result(&["a", "b"], &["a"], &[Some("a")]);
        let r2 = result(&["a", "b"], &["a", "b"], &[Some("b"), Some("a")]);
        let report = compute_metrics(&[r1, r2]).unwrap();
        assert!((report.mean_acc - 50.0).abs() < 1e-9);
        assert_eq!(report.per_episode.len(), 2);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Brute-force re-count used as the oracle.
        fn oracle(results: &[EpisodeResult]) -> (f64, u64) {
            let mut acc_sum = 0.0;
            let mut abstentions = 0u64;
            for r in results {
                let mut correct = 0usize;
                for (t, p) in r.truths.iter().zip(&r.preds) {
                    match p {
                        Some(p) if p == t => correct += 1,
                        Some(_) => {}
                        None => abstentions += 1,
                    }
                }
                acc_sum += 100.0 * correct as f64 / r.truths.len() as f64;
            }
            (acc_sum / results.len() as f64, abstentions)
        }

        fn arb_results() -> impl Strategy<Value = Vec<EpisodeResult>> {
            proptest::collection::vec(
                (proptest::collection::vec(0usize..3, 1..12), any::<u64>()).prop_map(
                    |(truth_ids, seed)| {
                        use rand::{Rng, SeedableRng};
                        let classes = ["a", "b", "c"];
                        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                        let truths: Vec<String> =
                            truth_ids.iter().map(|&i| classes[i].to_string()).collect();
                        let preds: Vec<Option<String>> = truth_ids
                            .iter()
                            .map(|_| {
                                if rng.random_range(0..10) == 0 {
                                    None
                                } else {
                                    Some(classes[rng.random_range(0..3)].to_string())
                                }
                            })
                            .collect();
                        EpisodeResult {
                            episode_index: 0,
                            classes: classes.iter().map(|s| s.to_string()).collect(),
                            truths,
                            preds,
                        }
                    },
                ),
                1..8,
            )
        }

        proptest! {
            #[test]
            fn matches_brute_force_and_stays_bounded(results in arb_results()) {
                let report = compute_metrics(&results).unwrap();
                let (acc, abst) = oracle(&results);
                prop_assert!((report.mean_acc - acc).abs() < 1e-9);
                prop_assert_eq!(report.abstentions, abst);
                prop_assert!((0.0..=100.0).contains(&report.mean_acc));
                prop_assert!((0.0..=100.0).contains(&report.macro_f1));
                // Row sums plus abstentions equal per-class query counts.
                for (i, class) in report.confusion.classes.iter().enumerate() {
                    let row: u64 = report.confusion.counts[i].iter().sum();
                    let queries: u64 = results
                        .iter()
                        .flat_map(|r| r.truths.iter())
                        .filter(|t| *t == class)
                        .count() as u64;
                    prop_assert_eq!(row + report.confusion.abstained[i], queries);
                }
            }
        }
    }
}
