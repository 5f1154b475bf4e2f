//! Aspect-distributed prototype construction.
//!
//! A class's K support shots rarely share one signature: aspect changes
//! split them into regimes. Building one prototype per *aspect cluster*
//! keeps each regime's scattering-center pattern intact, where a single
//! all-support average would blur patterns together.
//!
//! The pipeline per class is: max-normalize every support envelope
//! ([`embed_sample`]), pick the cluster count ([`choose_k`]), run k-means
//! ([`crate::cluster::cluster_supports`]), average the members of each
//! cluster, and re-extract a scattering-center signature from each mean
//! envelope. With one support (or a `Fixed(1)` policy) this degenerates to
//! the single-prototype, one-shot setup.

use crate::cluster::{cluster_supports, mean_silhouette, ClusterConfig, KPolicy};
use crate::error::{Error, Result};
use crate::scatter::{detect_in_magnitude, PeakParams, SCSignature};
use crate::signal::RangeProfile;

/// One aspect-cluster representative of a class.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    pub class_label: String,
    pub cluster_id: usize,
    pub member_count: usize,
    /// Arithmetic mean of the members' max-normalized envelopes.
    pub mean_profile: Vec<f64>,
    /// Signature re-extracted from `mean_profile`.
    pub signature: SCSignature,
}

/// Max-normalized envelope of a profile; the clustering feature space.
/// An all-zero profile maps to the zero vector.
pub fn embed_sample(profile: &RangeProfile) -> Vec<f64> {
    let mag = profile.magnitude();
    let max = mag.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return vec![0.0; mag.len()];
    }
    mag.iter().map(|v| v / max).collect()
}

/// Resolves the cluster count for a support set.
///
/// `Fixed(k)` caps at the support count; `SqrtRule` rounds the square root;
/// `Silhouette` scores k in [2, min(K-1, 6)] by mean silhouette and falls
/// back to one cluster when K < 4.
pub fn choose_k(embeddings: &[Vec<f64>], cfg: &ClusterConfig) -> Result<usize> {
    cfg.validate()?;
    let count = embeddings.len();
    if count == 0 {
        return Err(Error::invalid("cannot choose k for an empty support set"));
    }
    Ok(match cfg.k_policy {
        KPolicy::Fixed(k) => k.min(count),
        KPolicy::SqrtRule => ((count as f64).sqrt().round() as usize).max(1).min(count),
        KPolicy::Silhouette => {
            if count < 4 {
                1
            } else {
                let mut best = (2usize, f64::NEG_INFINITY);
                for k in 2..=(count - 1).min(6) {
                    let outcome = cluster_supports(embeddings, k, cfg)?;
                    let score = mean_silhouette(embeddings, &outcome.assignments, k);
                    if score > best.1 {
                        best = (k, score);
                    }
                }
                best.0
            }
        }
    })
}

/// Builds the prototype set of one class from its support shots.
pub fn build_prototypes(
    class_label: &str,
    supports: &[RangeProfile],
    cfg: &ClusterConfig,
    peak: &PeakParams,
) -> Result<Vec<Prototype>> {
    cfg.validate()?;
    peak.validate()?;
    if supports.is_empty() {
        return Err(Error::invalid(format!(
            "class '{class_label}' has no support shots"
        )));
    }
    let len = supports[0].len();
    if supports.iter().any(|s| s.len() != len) {
        return Err(Error::invalid(format!(
            "class '{class_label}' mixes profile lengths"
        )));
    }

    let embeddings: Vec<Vec<f64>> = supports.iter().map(embed_sample).collect();
    let k = choose_k(&embeddings, cfg)?;
    let outcome = cluster_supports(&embeddings, k, cfg)?;

    let mut prototypes = Vec::with_capacity(k);
    for cluster_id in 0..k {
        let members: Vec<&Vec<f64>> = embeddings
            .iter()
            .zip(&outcome.assignments)
            .filter(|(_, &a)| a == cluster_id)
            .map(|(e, _)| e)
            .collect();
        debug_assert!(!members.is_empty());
        let mut mean_profile = vec![0.0; len];
        for member in &members {
            for (m, v) in mean_profile.iter_mut().zip(member.iter()) {
                *m += v;
            }
        }
        for m in &mut mean_profile {
            *m /= members.len() as f64;
        }
        let signature = detect_in_magnitude(&mean_profile, peak)?;
        prototypes.push(Prototype {
            class_label: class_label.to_string(),
            cluster_id,
            member_count: members.len(),
            mean_profile,
            signature,
        });
    }
    Ok(prototypes)
}
