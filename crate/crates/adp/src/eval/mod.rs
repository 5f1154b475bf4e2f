//! Episodic few-shot evaluation.
//!
//! An episode draws N classes, K labeled supports per class, and a disjoint
//! balanced query set from a labeled dataset. Pipelines classify the
//! queries — through prototypes and a backend, or through one of the
//! classical baselines — and the metrics layer turns aligned
//! truth/prediction lists into mean accuracy and macro-F1, averaged over
//! episodes. The K-sweep driver repeats that grid over shot counts and
//! methods with fully factorized seeds: the samples inside an episode
//! depend only on `(seed, K, episode_index)`, never on the method.

mod baselines;
mod episode;
mod metrics;
mod pipeline;
mod sweep;

pub use baselines::{
    nearest_centroid_predict, one_nn_correlation_predict, one_nn_signature_predict,
    train_linear_sgd, LinearSgdModel,
};
pub use episode::{sample_episode, Episode, EpisodeSpec};
pub use metrics::{compute_metrics, ClassStats, Confusion, EpisodeResult, EvalReport};
pub use pipeline::{
    run_adp_pipeline, run_episode_method, run_monolithic_pipeline, Method, PipelineConfig,
    PipelineRun, QueryOutcome,
};
pub use sweep::{k_sweep, DetailRecord, SweepReport, SweepRow};
