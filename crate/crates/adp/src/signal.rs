//! HRRP signal formation.
//!
//! A wideband radar observes a target as `N` frequency-domain samples. When
//! the dominant scatterers sit on integer range cells, the measurement is
//! the linear model
//!
//! ```text
//! values = basis * coeffs + noise
//! ```
//!
//! where column `n` of the basis is the phase ramp of a scatterer at range
//! `n * range_resolution`, `coeffs` holds one complex scattering coefficient
//! per cell, and the noise is circular complex Gaussian. The range-domain
//! envelope — the curve usually plotted as "the HRRP", with one peak per
//! scattering center — is recovered by the conjugate projection
//! `|basisᴴ * values / N|`. With the default cell-aligned frequency step
//! (`freq_step_hz = bandwidth_hz / num_cells`) the basis is a scaled DFT
//! matrix and that projection is an exact inverse.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation speed used throughout, in m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Waveform and sampling constants of the radar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarParams {
    /// Carrier frequency f0, Hz.
    pub carrier_hz: f64,
    /// Signal bandwidth B, Hz.
    pub bandwidth_hz: f64,
    /// Pulse duration, seconds.
    pub pulse_width_s: f64,
    /// Number of range cells N.
    pub num_cells: usize,
    /// Frequency sample interval, Hz.
    pub freq_step_hz: f64,
}

impl Default for RadarParams {
    /// C-band defaults matching a 400 MHz / 306-cell measurement geometry,
    /// with the cell-aligned frequency step `bandwidth_hz / num_cells`.
    fn default() -> Self {
        RadarParams::aligned(306, 400.0e6)
    }
}

impl RadarParams {
    /// Parameters whose frequency step makes the basis a scaled DFT, so the
    /// conjugate projection is an exact inverse.
    pub fn aligned(num_cells: usize, bandwidth_hz: f64) -> Self {
        RadarParams {
            carrier_hz: 5.52e9,
            bandwidth_hz,
            pulse_width_s: 25.6e-6,
            num_cells,
            freq_step_hz: bandwidth_hz / num_cells.max(1) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid(format!(
                "bandwidth_hz must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if !(self.pulse_width_s > 0.0) {
            return Err(Error::invalid(format!(
                "pulse_width_s must be positive, got {}",
                self.pulse_width_s
            )));
        }
        if self.num_cells == 0 {
            return Err(Error::invalid("num_cells must be at least 1"));
        }
        if !(self.freq_step_hz > 0.0) {
            return Err(Error::invalid(format!(
                "freq_step_hz must be positive, got {}",
                self.freq_step_hz
            )));
        }
        Ok(())
    }

    /// Chirp rate bandwidth / pulse width, Hz/s. Always recomputed.
    pub fn chirp_rate(&self) -> f64 {
        self.bandwidth_hz / self.pulse_width_s
    }

    /// Range extent of one cell, `SPEED_OF_LIGHT / (2 * bandwidth_hz)`.
    pub fn range_resolution(&self) -> Result<f64> {
        range_resolution(self)
    }

    /// True when `freq_step_hz` makes the basis a scaled DFT matrix.
    pub fn is_dft_aligned(&self) -> bool {
        let ideal = self.bandwidth_hz / self.num_cells as f64;
        (self.freq_step_hz - ideal).abs() <= 1e-9 * ideal.abs()
    }
}

/// Range resolution in meters for the given bandwidth.
pub fn range_resolution(params: &RadarParams) -> Result<f64> {
    if !(params.bandwidth_hz > 0.0) {
        return Err(Error::invalid(format!(
            "bandwidth_hz must be positive, got {}",
            params.bandwidth_hz
        )));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * params.bandwidth_hz))
}

/// One point scatterer: a range cell and a complex scattering coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub cell: usize,
    pub coeff: Complex64,
}

impl Scatterer {
    /// Scatterer with a nonnegative real coefficient.
    pub fn real(cell: usize, amplitude: f64) -> Self {
        Scatterer {
            cell,
            coeff: Complex64::new(amplitude, 0.0),
        }
    }
}

/// The set of scatterers that make up one target view.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScattererSet {
    pub entries: Vec<Scatterer>,
}

impl ScattererSet {
    pub fn new(entries: Vec<Scatterer>) -> Self {
        ScattererSet { entries }
    }

    /// Builds a set of real-coefficient scatterers from `(cell, amplitude)` pairs.
    pub fn from_real(pairs: &[(usize, f64)]) -> Self {
        ScattererSet {
            entries: pairs.iter().map(|&(c, a)| Scatterer::real(c, a)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks every cell against the profile extent.
    pub fn validate(&self, num_cells: usize) -> Result<()> {
        if self.entries.len() > num_cells {
            return Err(Error::invalid(format!(
                "{} scatterers exceed the {} available range cells",
                self.entries.len(),
                num_cells
            )));
        }
        for s in &self.entries {
            if s.cell >= num_cells {
                return Err(Error::ScattererOutOfRange {
                    cell: s.cell,
                    num_cells,
                });
            }
        }
        Ok(())
    }

    /// Dense coefficient vector with one slot per range cell; overlapping
    /// scatterers superpose coherently.
    pub fn coefficient_vector(&self, num_cells: usize) -> Result<Vec<Complex64>> {
        self.validate(num_cells)?;
        let mut omega = vec![Complex64::new(0.0, 0.0); num_cells];
        for s in &self.entries {
            omega[s.cell] += s.coeff;
        }
        Ok(omega)
    }
}

/// Where a profile came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSource {
    Synthetic,
    Loaded,
}

/// One HRRP sample.
///
/// `values` holds the raw frequency-domain measurement when it is known
/// (synthesized profiles always carry it; loaded ones may not). `magnitude`
/// is the range-domain envelope used by every downstream consumer — peak
/// detection, embeddings, and prototypes all operate on it.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    values: Option<Vec<Complex64>>,
    magnitude: Vec<f64>,
    pub label: Option<String>,
    pub aspect_deg: Option<f64>,
    pub source: ProfileSource,
}

impl RangeProfile {
    /// Wraps frequency-domain samples, deriving the range envelope through
    /// the conjugate basis projection.
    pub fn from_frequency_values(values: Vec<Complex64>, params: &RadarParams) -> Result<Self> {
        params.validate()?;
        if values.len() != params.num_cells {
            return Err(Error::invalid(format!(
                "{} values do not match num_cells = {}",
                values.len(),
                params.num_cells
            )));
        }
        let magnitude = range_envelope(&values, params)?;
        Ok(RangeProfile {
            values: Some(values),
            magnitude,
            label: None,
            aspect_deg: None,
            source: ProfileSource::Synthetic,
        })
    }

    /// Wraps an already-computed range envelope, optionally keeping the raw
    /// frequency samples alongside (the loader path).
    pub fn from_parts(magnitude: Vec<f64>, values: Option<Vec<Complex64>>) -> Result<Self> {
        if magnitude.is_empty() {
            return Err(Error::invalid("magnitude must be non-empty"));
        }
        if magnitude.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::invalid(
                "magnitude entries must be finite and nonnegative",
            ));
        }
        if let Some(v) = &values {
            if v.len() != magnitude.len() {
                return Err(Error::invalid(format!(
                    "complex length {} does not match magnitude length {}",
                    v.len(),
                    magnitude.len()
                )));
            }
        }
        Ok(RangeProfile {
            values,
            magnitude,
            label: None,
            aspect_deg: None,
            source: ProfileSource::Loaded,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_aspect(mut self, aspect_deg: f64) -> Self {
        self.aspect_deg = Some(aspect_deg);
        self
    }

    /// Number of range cells.
    pub fn len(&self) -> usize {
        self.magnitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitude.is_empty()
    }

    /// Range-domain envelope, one nonnegative value per cell.
    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    /// Raw frequency-domain samples when available.
    pub fn values(&self) -> Option<&[Complex64]> {
        self.values.as_deref()
    }
}

/// Column phase ramp of a scatterer at `range_m`, evaluated at sample `k`.
#[inline]
fn phase_at(range_m: f64, k: usize, params: &RadarParams) -> f64 {
    -(4.0 * std::f64::consts::PI / SPEED_OF_LIGHT) * range_m * k as f64 * params.freq_step_hz
}

/// The length-N phase ramp of a scatterer at `range_m`.
///
/// Element `k` is `exp(-j * (4π/c) * range_m * k * freq_step_hz)`; element 0
/// is exactly `1 + 0j`.
pub fn fourier_basis_column(range_m: f64, params: &RadarParams) -> Result<Vec<Complex64>> {
    params.validate()?;
    Ok((0..params.num_cells)
        .map(|k| Complex64::from_polar(1.0, phase_at(range_m, k, params)))
        .collect())
}

/// The N×N synthesis basis; column `n` is the ramp of a scatterer at
/// `n * range_resolution`.
#[derive(Debug, Clone)]
pub struct FourierBasis {
    num_cells: usize,
    /// Column-major storage.
    cols: Vec<Vec<Complex64>>,
}

impl FourierBasis {
    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    /// Column `n` (the ramp for range cell `n`).
    pub fn column(&self, n: usize) -> &[Complex64] {
        &self.cols[n]
    }

    /// Entry at row `k` (frequency sample), column `n` (range cell).
    pub fn entry(&self, k: usize, n: usize) -> Complex64 {
        self.cols[n][k]
    }

    /// Forward model: `basis * coeffs`.
    pub fn apply(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.num_cells {
            return Err(Error::invalid(format!(
                "coefficient length {} does not match {} cells",
                coeffs.len(),
                self.num_cells
            )));
        }
        let n = self.num_cells;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (col, &c) in self.cols.iter().zip(coeffs) {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, &e) in out.iter_mut().zip(col) {
                *o += c * e;
            }
        }
        Ok(out)
    }

    /// Conjugate projection `basisᴴ * values / N`; the range-domain
    /// reconstruction (exact inverse under aligned parameters).
    pub fn adjoint_scaled(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        if values.len() != self.num_cells {
            return Err(Error::invalid(format!(
                "value length {} does not match {} cells",
                values.len(),
                self.num_cells
            )));
        }
        let n = self.num_cells as f64;
        Ok(self
            .cols
            .iter()
            .map(|col| {
                col.iter()
                    .zip(values)
                    .map(|(e, v)| e.conj() * v)
                    .sum::<Complex64>()
                    / n
            })
            .collect())
    }
}

/// Builds the full synthesis basis for `params`.
pub fn build_basis(params: &RadarParams) -> Result<FourierBasis> {
    params.validate()?;
    let dr = range_resolution(params)?;
    let cols = (0..params.num_cells)
        .map(|n| fourier_basis_column(n as f64 * dr, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(FourierBasis {
        num_cells: params.num_cells,
        cols,
    })
}

/// Frequency-domain samples of a scatterer set, without noise.
pub(crate) fn synthesize_values(
    scatterers: &ScattererSet,
    params: &RadarParams,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    scatterers.validate(params.num_cells)?;
    let dr = range_resolution(params)?;
    let n = params.num_cells;
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for s in &scatterers.entries {
        let range_m = s.cell as f64 * dr;
        for (k, v) in values.iter_mut().enumerate() {
            *v += s.coeff * Complex64::from_polar(1.0, phase_at(range_m, k, params));
        }
    }
    Ok(values)
}

/// Range-domain envelope `|basisᴴ * values / N|` computed directly from the
/// parameters, without materializing the basis.
pub(crate) fn range_envelope(values: &[Complex64], params: &RadarParams) -> Result<Vec<f64>> {
    params.validate()?;
    if values.len() != params.num_cells {
        return Err(Error::invalid(format!(
            "value length {} does not match num_cells = {}",
            values.len(),
            params.num_cells
        )));
    }
    let dr = range_resolution(params)?;
    let n = params.num_cells;
    let scale = n as f64;
    Ok((0..n)
        .map(|cell| {
            let range_m = cell as f64 * dr;
            let acc: Complex64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| Complex64::from_polar(1.0, -phase_at(range_m, k, params)) * v)
                .sum();
            (acc / scale).norm()
        })
        .collect())
}

/// Synthesizes one profile: `values = basis * coeffs + noise`.
///
/// The noise is i.i.d. circular complex Gaussian with per-component standard
/// deviation `noise_sigma`, drawn from a ChaCha stream keyed by `seed`
/// (real part then imaginary part, sample by sample). `noise_sigma = 0`
/// skips the draw entirely, so the output is bit-identical across seeds.
pub fn synthesize_profile(
    scatterers: &ScattererSet,
    params: &RadarParams,
    noise_sigma: f64,
    seed: u64,
) -> Result<RangeProfile> {
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(Error::invalid(format!(
            "noise_sigma must be finite and nonnegative, got {noise_sigma}"
        )));
    }
    let mut values = synthesize_values(scatterers, params)?;
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma)
            .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut values {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *v += Complex64::new(re, im);
        }
    }
    RangeProfile::from_frequency_values(values, params)
}
