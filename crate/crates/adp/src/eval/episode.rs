//! N-way K-shot episode sampling.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::signal::RangeProfile;

/// Shape of an episodic evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeSpec {
    /// Classes per episode (N).
    pub n_way: usize,
    /// Supports per class (K).
    pub k_shot: usize,
    /// Total queries per episode, balanced across classes.
    pub n_query: usize,
    /// Episodes per run.
    pub episodes: usize,
    pub seed: u64,
}

impl Default for EpisodeSpec {
    fn default() -> Self {
        EpisodeSpec {
            n_way: 3,
            k_shot: 5,
            n_query: 9,
            episodes: 50,
            seed: 0,
        }
    }
}

impl EpisodeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_way < 2 {
            return Err(Error::invalid("n_way must be at least 2"));
        }
        if self.k_shot < 1 {
            return Err(Error::invalid("k_shot must be at least 1"));
        }
        if self.n_query < 1 {
            return Err(Error::invalid("n_query must be at least 1"));
        }
        if self.episodes < 1 {
            return Err(Error::invalid("episodes must be at least 1"));
        }
        Ok(())
    }

    /// Same spec with a different shot count.
    pub fn with_k(mut self, k_shot: usize) -> Self {
        self.k_shot = k_shot;
        self
    }

    /// Same spec with a different seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One sampled N-way K-shot task.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// The N sampled classes, in sampled order (also the candidate order).
    pub classes: Vec<String>,
    /// Exactly K supports per class, class-major in `classes` order.
    pub support: Vec<(RangeProfile, String)>,
    /// Queries with their true labels, shuffled.
    pub query: Vec<(RangeProfile, String)>,
}

impl Episode {
    /// Supports of one class, in sampled order.
    pub fn supports_of(&self, class: &str) -> Vec<&RangeProfile> {
        self.support
            .iter()
            .filter(|(_, l)| l == class)
            .map(|(p, _)| p)
            .collect()
    }
}

/// Samples episode `episode_index` of a run.
///
/// Classes are drawn without replacement, then per class K supports and a
/// balanced share of queries (the remainder going to the earliest sampled
/// classes), all without replacement and disjoint by construction. The
/// entire draw is keyed by `(spec.seed, episode_index)`.
pub fn sample_episode(
    dataset: &[RangeProfile],
    spec: &EpisodeSpec,
    episode_index: usize,
) -> Result<Episode> {
    spec.validate()?;
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, profile) in dataset.iter().enumerate() {
        let Some(label) = profile.label.as_deref() else {
            return Err(Error::invalid(format!("dataset sample {i} has no label")));
        };
        by_class.entry(label).or_default().push(i);
    }
    if by_class.len() < spec.n_way {
        return Err(Error::invalid(format!(
            "dataset has {} classes, episode needs {}",
            by_class.len(),
            spec.n_way
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[episode_index as u64]));
    let mut class_names: Vec<&str> = by_class.keys().copied().collect();
    class_names.shuffle(&mut rng);
    class_names.truncate(spec.n_way);

    // Balanced query allocation; remainder to the earliest sampled classes.
    let base = spec.n_query / spec.n_way;
    let remainder = spec.n_query % spec.n_way;
    let per_class_need = spec.k_shot + spec.n_query.div_ceil(spec.n_way);

    let mut support = Vec::with_capacity(spec.n_way * spec.k_shot);
    let mut query = Vec::with_capacity(spec.n_query);
    for (ci, class) in class_names.iter().enumerate() {
        let indices = &by_class[class];
        if indices.len() < per_class_need {
            return Err(Error::DatasetTooSmall {
                class: class.to_string(),
                available: indices.len(),
                needed: per_class_need,
            });
        }
        let mut shuffled = indices.clone();
        shuffled.shuffle(&mut rng);
        let n_queries = base + usize::from(ci < remainder);
        for &i in shuffled.iter().take(spec.k_shot) {
            support.push((dataset[i].clone(), class.to_string()));
        }
        for &i in shuffled.iter().skip(spec.k_shot).take(n_queries) {
            query.push((dataset[i].clone(), class.to_string()));
        }
    }
    query.shuffle(&mut rng);

    Ok(Episode {
        classes: class_names.into_iter().map(str::to_string).collect(),
        support,
        query,
    })
}
