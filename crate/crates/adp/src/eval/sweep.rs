//! The K-sweep experiment: methods × shot counts × episodes.

use serde::{Deserialize, Serialize};

use crate::backend::{BackendConfig, BackendHandle};
use crate::error::Result;
use crate::eval::episode::{sample_episode, EpisodeSpec};
use crate::eval::metrics::{compute_metrics, EpisodeResult};
use crate::eval::pipeline::{run_episode_method, Method, PipelineConfig};
use crate::seed::derive_seed;
use crate::signal::RangeProfile;

/// One (method, K) summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub backend: String,
    pub k: usize,
    pub episodes: usize,
    pub mean_acc: f64,
    pub macro_f1: f64,
    pub abstentions: u64,
}

/// Per-episode detail for one (method, K, episode) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailRecord {
    pub episode: usize,
    pub k: usize,
    pub method: String,
    pub truth: Vec<String>,
    pub pred: Vec<Option<String>>,
}

/// Full sweep output: summary rows in (K, method) order plus every
/// episode's truth/prediction lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub details: Vec<DetailRecord>,
}

/// Runs `base.episodes` episodes for every `(k, method)` pair.
///
/// Episode sampling is keyed by `(base.seed, k, episode_index)` and method
/// randomness by `(base.seed, k, method_index, episode_index)`, so changing
/// the method list never changes which samples an episode contains.
pub fn k_sweep(
    dataset: &[RangeProfile],
    base: &EpisodeSpec,
    k_values: &[usize],
    methods: &[Method],
    cfg: &PipelineConfig,
    backend_cfg: &BackendConfig,
) -> Result<SweepReport> {
    base.validate()?;
    let backend = BackendHandle::from_config(backend_cfg, cfg.match_params)?;
    let mut rows = Vec::with_capacity(k_values.len() * methods.len());
    let mut details = Vec::new();
    for &k in k_values {
        let spec = base
            .with_k(k)
            .with_seed(derive_seed(base.seed, &[k as u64]));
        for method in methods {
            let method_index = Method::ALL
                .iter()
                .position(|m| m == method)
                .expect("method is known") as u64;
            let mut results: Vec<EpisodeResult> = Vec::with_capacity(base.episodes);
            for episode_index in 0..base.episodes {
                let episode = sample_episode(dataset, &spec, episode_index)?;
                let method_seed =
                    derive_seed(base.seed, &[k as u64, method_index, episode_index as u64]);
                results.push(run_episode_method(
                    &episode,
                    episode_index,
                    *method,
                    cfg,
                    &backend,
                    method_seed,
                )?);
            }
            let report = compute_metrics(&results)?;
            rows.push(SweepRow {
                method: method.id().to_string(),
                backend: if method.uses_backend() {
                    backend.kind_name().to_string()
                } else {
                    "none".to_string()
                },
                k,
                episodes: base.episodes,
                mean_acc: report.mean_acc,
                macro_f1: report.macro_f1,
                abstentions: report.abstentions,
            });
            details.extend(results.into_iter().map(|r| DetailRecord {
                episode: r.episode_index,
                k,
                method: method.id().to_string(),
                truth: r.truths,
                pred: r.preds,
            }));
        }
    }
    Ok(SweepReport { rows, details })
}
