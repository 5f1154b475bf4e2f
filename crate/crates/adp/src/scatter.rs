//! Scattering-center extraction.
//!
//! A scattering center shows up as a prominent peak in the range envelope.
//! Extraction normalizes the envelope, keeps local maxima whose topographic
//! prominence clears a threshold, greedily suppresses neighbors closer than
//! a minimum spacing (strongest first), caps the count, and renormalizes so
//! the strongest retained peak reads exactly 1.000. The result is the
//! amplitude-sorted signature that both the prompt builder and the
//! surrogate matcher consume.
//!
//! Prominence here is the classic topographic definition: the height of a
//! peak above the higher of the two lowest valleys that separate it from
//! higher terrain (or from the array boundary on sides with no higher
//! terrain).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::RangeProfile;

/// Peak-picking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeakParams {
    /// Minimum topographic prominence on the max-normalized envelope.
    pub prominence: f64,
    /// Minimum spacing between retained peaks, in range cells.
    pub min_spacing: usize,
    /// Upper limit on retained peaks.
    pub max_peaks: usize,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams {
            prominence: 0.15,
            min_spacing: 5,
            max_peaks: 10,
        }
    }
}

impl PeakParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.prominence > 0.0 && self.prominence <= 1.0) {
            return Err(Error::invalid(format!(
                "prominence must be in (0, 1], got {}",
                self.prominence
            )));
        }
        if self.min_spacing < 1 {
            return Err(Error::invalid("min_spacing must be at least 1"));
        }
        if self.max_peaks < 1 {
            return Err(Error::invalid("max_peaks must be at least 1"));
        }
        Ok(())
    }
}

/// One extracted scattering center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringCenter {
    /// Range cell of the peak.
    pub range_index: usize,
    /// Amplitude normalized so the strongest retained peak is 1.0.
    pub amplitude: f64,
}

/// The textualizable scattering-center list of one profile, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignatureRecord", into = "SignatureRecord")]
pub struct SCSignature {
    entries: Vec<ScatteringCenter>,
    profile_len: usize,
}

/// Wire form: `{"profile_len": N, "entries": [[index, amplitude], ...]}`.
#[derive(Serialize, Deserialize)]
struct SignatureRecord {
    profile_len: usize,
    entries: Vec<(usize, f64)>,
}

impl From<SCSignature> for SignatureRecord {
    fn from(sig: SCSignature) -> Self {
        SignatureRecord {
            profile_len: sig.profile_len,
            entries: sig
                .entries
                .iter()
                .map(|e| (e.range_index, e.amplitude))
                .collect(),
        }
    }
}

impl TryFrom<SignatureRecord> for SCSignature {
    type Error = Error;

    fn try_from(rec: SignatureRecord) -> Result<Self> {
        SCSignature::new(
            rec.entries
                .into_iter()
                .map(|(range_index, amplitude)| ScatteringCenter {
                    range_index,
                    amplitude,
                })
                .collect(),
            rec.profile_len,
        )
    }
}

impl SCSignature {
    /// Validates and wraps an entry list: amplitudes non-increasing in
    /// (0, 1], indices inside the profile. Extraction additionally
    /// guarantees that the strongest entry is exactly 1; hand-built
    /// signatures (sub-prototype fragments, matcher inputs) may start
    /// lower.
    pub fn new(entries: Vec<ScatteringCenter>, profile_len: usize) -> Result<Self> {
        for pair in entries.windows(2) {
            if pair[1].amplitude > pair[0].amplitude {
                return Err(Error::invalid(
                    "entries must be sorted by non-increasing amplitude",
                ));
            }
        }
        for e in &entries {
            if !(e.amplitude > 0.0 && e.amplitude <= 1.0 + 1e-9) {
                return Err(Error::invalid(format!(
                    "amplitude {} outside (0, 1]",
                    e.amplitude
                )));
            }
            if e.range_index >= profile_len {
                return Err(Error::invalid(format!(
                    "range index {} outside profile of length {profile_len}",
                    e.range_index
                )));
            }
        }
        Ok(SCSignature {
            entries,
            profile_len,
        })
    }

    pub fn empty(profile_len: usize) -> Self {
        SCSignature {
            entries: Vec::new(),
            profile_len,
        }
    }

    pub fn entries(&self) -> &[ScatteringCenter] {
        &self.entries
    }

    pub fn profile_len(&self) -> usize {
        self.profile_len
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Extracts the scattering-center signature of a profile's range envelope.
pub fn detect_scattering_centers(
    profile: &RangeProfile,
    params: &PeakParams,
) -> Result<SCSignature> {
    detect_in_magnitude(profile.magnitude(), params)
}

/// Extraction on a bare envelope; used for cluster-mean profiles that never
/// existed as measurements.
pub fn detect_in_magnitude(magnitude: &[f64], params: &PeakParams) -> Result<SCSignature> {
    params.validate()?;
    if magnitude.is_empty() {
        return Err(Error::invalid("profile magnitude is empty"));
    }
    let n = magnitude.len();
    let max = magnitude.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 || n < 2 {
        return Ok(SCSignature::empty(n));
    }
    let m: Vec<f64> = magnitude.iter().map(|v| v / max).collect();

    // Local maxima; boundary cells only when strictly above their single
    // interior neighbor.
    let mut candidates: Vec<usize> = Vec::new();
    if m[0] > m[1] {
        candidates.push(0);
    }
    for i in 1..n - 1 {
        if m[i] > m[i - 1] && m[i] > m[i + 1] {
            candidates.push(i);
        }
    }
    if m[n - 1] > m[n - 2] {
        candidates.push(n - 1);
    }

    // Prominence filter.
    let mut peaks: Vec<(usize, f64)> = candidates
        .into_iter()
        .filter(|&p| prominence(&m, p) >= params.prominence)
        .map(|p| (p, m[p]))
        .collect();

    // Greedy spacing suppression, strongest first; equal heights in
    // ascending index order so the outcome is deterministic.
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, f64)> = Vec::new();
    for (idx, height) in peaks {
        if kept.len() == params.max_peaks {
            break;
        }
        if kept
            .iter()
            .all(|&(k, _)| k.abs_diff(idx) >= params.min_spacing)
        {
            kept.push((idx, height));
        }
    }
    if kept.is_empty() {
        return Ok(SCSignature::empty(n));
    }

    // Renormalize so the strongest retained peak is exactly 1.
    let top = kept[0].1;
    let entries = kept
        .into_iter()
        .map(|(range_index, h)| ScatteringCenter {
            range_index,
            amplitude: h / top,
        })
        .collect();
    SCSignature::new(entries, n)
}

/// Topographic prominence of the peak at `p` on a normalized envelope.
fn prominence(m: &[f64], p: usize) -> f64 {
    let h = m[p];
    let left = side_valley(m, p, -1);
    let right = side_valley(m, p, 1);
    let base = match (left, right) {
        (Some(l), Some(r)) => l.max(r),
        (Some(l), None) => l,
        (None, Some(r)) => r,
        // Single-cell array; callers never reach this.
        (None, None) => return h,
    };
    h - base
}

/// Lowest value between the peak and the nearest strictly-higher terrain in
/// one direction, or down to the boundary when none exists. `None` when the
/// peak sits on that boundary.
fn side_valley(m: &[f64], p: usize, dir: i64) -> Option<f64> {
    let n = m.len() as i64;
    let mut i = p as i64 + dir;
    if i < 0 || i >= n {
        return None;
    }
    let h = m[p];
    let mut valley = f64::INFINITY;
    while i >= 0 && i < n {
        let v = m[i as usize];
        if v > h {
            break;
        }
        if v < valley {
            valley = v;
        }
        i += dir;
    }
    Some(valley)
}

/// Renders a signature exactly as the prompt expects, e.g.
///
/// ```text
/// [
///   {'range index': 247, 'normalized amplitude': 1.000},
///   {'range index': 236, 'normalized amplitude': 0.629}
/// ]
/// ```
///
/// Amplitudes carry exactly three decimals; an empty signature renders as
/// `[]`. The output is byte-stable for equal inputs.
pub fn textualize_signature(sig: &SCSignature) -> String {
    if sig.is_empty() {
        return "[]".to_string();
    }
    let lines: Vec<String> = sig
        .entries()
        .iter()
        .map(|e| {
            format!(
                "  {{'range index': {}, 'normalized amplitude': {:.3}}}",
                e.range_index, e.amplitude
            )
        })
        .collect();
    format!("[\n{}\n]", lines.join(",\n"))
}
