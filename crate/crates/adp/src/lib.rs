//! Aspect-distributed prototypes for few-shot HRRP target recognition.
//!
//! High-resolution range profiles (HRRPs) are one-dimensional radar
//! signatures whose peaks mark the target's dominant scattering centers.
//! They are also strongly aspect-dependent: a few degrees of rotation can
//! move, merge, or swap peaks, so the samples of one class form several
//! distinct signature regimes rather than a single cloud. Classifiers that
//! average a class's support shots into one representative blur those
//! regimes together; this crate instead clusters each class's support set
//! into aspect groups and keeps one prototype per group.
//!
//! The crate covers the whole pipeline:
//!
//! - [`signal`] — the frequency-domain HRRP synthesis model and range
//!   envelope recovery;
//! - [`synthetic`] — seeded scatterer-set generators and aspect-sweep
//!   dataset construction;
//! - [`scatter`] — scattering-center extraction by topographic-prominence
//!   peak picking, plus the prompt-facing text rendering;
//! - [`prototype`] — per-class aspect clustering (k-means) and prototype
//!   construction;
//! - [`prompt`] — assembly of the in-context-learning prompt and parsing of
//!   model verdicts;
//! - [`backend`] — a remote chat-completion client with retry/backoff and a
//!   response cache, and a deterministic offline surrogate matcher;
//! - [`eval`] — N-way K-shot episode sampling, pipelines, baselines,
//!   metrics, and the K-sweep experiment;
//! - [`io`] — JSON Lines / CSV persistence for datasets, prototype stores,
//!   and reports.
//!
//! Everything is deterministic under an explicit seed, and the surrogate
//! backend lets the full evaluation run offline.

pub mod backend;
pub mod cluster;
pub mod error;
pub mod eval;
pub mod io;
pub mod prompt;
pub mod prototype;
pub mod scatter;
pub mod seed;
pub mod signal;
pub mod synthetic;

pub use backend::{BackendConfig, BackendHandle, BackendKind, MatchParams};
pub use cluster::{ClusterConfig, KMeansOutcome, KPolicy};
pub use error::{Error, Result};
pub use eval::{
    compute_metrics, k_sweep, run_adp_pipeline, run_monolithic_pipeline, sample_episode, Episode,
    EpisodeResult, EpisodeSpec, EvalReport, Method, PipelineConfig, QueryOutcome,
};
pub use prompt::{PromptDocument, TaskContext, Verdict};
pub use prototype::{build_prototypes, choose_k, embed_sample, Prototype};
pub use scatter::{
    detect_scattering_centers, textualize_signature, PeakParams, SCSignature, ScatteringCenter,
};
pub use signal::{
    build_basis, fourier_basis_column, range_resolution, synthesize_profile, FourierBasis,
    ProfileSource, RadarParams, RangeProfile, Scatterer, ScattererSet, SPEED_OF_LIGHT,
};
pub use synthetic::{generate_aspect_dataset, SyntheticClassSpec};
