//! Input-output transmission of a cavity mode coupled to several
//! magnetostatic modes:
//!
//! ```text
//! T(ω) = κc / ( j(ω−ωc) − (2κc+κint)/2 + Σ_i |g_i|² / (−γ_i/2 + j(ω−ω_i)) )
//! ```
//!
//! Evaluation is done in angular units; inputs and outputs use the /2π
//! convention of [`crate::params`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::dispersion::mode_frequency;
use crate::error::{Error, Result};
use crate::params::{amplitude_to_db, CavityModeParams, MaterialParams, MsmIndex};
use crate::peaks::{find_maxima, find_minima};

/// Default topographic prominence for spectral peaks, dB.
pub const PEAK_PROMINENCE_DB: f64 = 3.0;
/// Default prominence for anticrossing dips in a fixed-frequency trace, dB.
pub const DIP_PROMINENCE_DB: f64 = 1.0;
/// Number of frequency samples across the default span.
pub const DEFAULT_FREQ_POINTS: usize = 1601;

/// A magnon mode at one bias field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnonModeEntry {
    pub index: MsmIndex,
    pub freq_ghz: f64,
    pub gamma_mhz: f64,
    pub g_mhz: f64,
}

/// Field-independent description of a mode: its frequency follows the
/// closed-form dispersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub index: MsmIndex,
    pub g_mhz: f64,
    pub gamma_mhz: f64,
}

impl ModeSpec {
    pub fn new(index: MsmIndex, g_mhz: f64, gamma_mhz: f64) -> Result<Self> {
        if !(gamma_mhz > 0.0) {
            return Err(Error::invalid("mode.gamma", format!("must be > 0, got {gamma_mhz}")));
        }
        if !(g_mhz >= 0.0) {
            return Err(Error::invalid("mode.g", format!("must be >= 0, got {g_mhz}")));
        }
        Ok(Self {
            index,
            g_mhz,
            gamma_mhz,
        })
    }

    pub fn at_field(&self, h0: f64, mat: &MaterialParams) -> Result<MagnonModeEntry> {
        Ok(MagnonModeEntry {
            index: self.index,
            freq_ghz: mode_frequency(self.index, h0, mat)?,
            gamma_mhz: self.gamma_mhz,
            g_mhz: self.g_mhz,
        })
    }
}

/// Every mode of `modes` evaluated at `h0`.
pub fn modes_at_field(modes: &[ModeSpec], h0: f64, mat: &MaterialParams) -> Result<Vec<MagnonModeEntry>> {
    modes.iter().map(|m| m.at_field(h0, mat)).collect()
}

/// Complex transmission at probe frequency `f_ghz`.
pub fn transmission_at(f_ghz: f64, cavity: &CavityModeParams, magnons: &[MagnonModeEntry]) -> Complex64 {
    let w = 2.0 * PI;
    let j = Complex64::i();
    let kappa_c = w * cavity.kappa_c_mhz;
    let kappa = w * cavity.kappa_mhz();
    let mut den = j * (w * 1e3 * (f_ghz - cavity.fc_ghz)) - 0.5 * kappa;
    for mode in magnons {
        let g = w * mode.g_mhz;
        let gamma = w * mode.gamma_mhz;
        den += g * g / (-0.5 * gamma + j * (w * 1e3 * (f_ghz - mode.freq_ghz)));
    }
    kappa_c / den
}

/// `20·log10|T|`.
pub fn transmission_db(f_ghz: f64, cavity: &CavityModeParams, magnons: &[MagnonModeEntry]) -> f64 {
    amplitude_to_db(transmission_at(f_ghz, cavity, magnons).norm())
}

/// |T| in dB across `freqs`.
pub fn spectrum_db(freqs: &[f64], cavity: &CavityModeParams, magnons: &[MagnonModeEntry]) -> Vec<f64> {
    freqs.iter().map(|&f| transmission_db(f, cavity, magnons)).collect()
}

/// Upper bound 2κc/κ on |T| for a passive port.
pub fn passivity_bound(cavity: &CavityModeParams) -> f64 {
    2.0 * cavity.kappa_c_mhz / cavity.kappa_mhz()
}

/// `n` points `start + i·step`.
pub fn uniform_axis(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start + i as f64 * step).collect()
}

/// Field grid from `min` to `max` inclusive (rounded to whole steps).
pub fn field_axis(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max > min) {
        return Err(Error::invalid(
            "sweep.field",
            format!("need field_max > field_min and step > 0, got [{min}, {max}] step {step}"),
        ));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok(uniform_axis(min, step, n))
}

/// `points` frequencies spanning `span_mhz` centered on `center_ghz`; for
/// odd `points` the center sample equals `center_ghz` exactly.
pub fn centered_axis(center_ghz: f64, span_mhz: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(span_mhz > 0.0) {
        return Err(Error::invalid(
            "sweep.freq",
            format!("need >= 2 points and a positive span, got {points} points over {span_mhz} MHz"),
        ));
    }
    let step = span_mhz * 1e-3 / (points - 1) as f64;
    let mid = (points - 1) as f64 / 2.0;
    Ok((0..points).map(|i| center_ghz + (i as f64 - mid) * step).collect())
}

/// Amplitude grid over (bias field × frequency), row-major with the field
/// index outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMap {
    field_axis: Vec<f64>,
    freq_axis: Vec<f64>,
    amplitude_db: Vec<f64>,
}

impl SpectralMap {
    pub fn new(field_axis: Vec<f64>, freq_axis: Vec<f64>, amplitude_db: Vec<f64>) -> Result<Self> {
        check_axis("field_axis", &field_axis)?;
        check_axis("freq_axis", &freq_axis)?;
        if amplitude_db.len() != field_axis.len() * freq_axis.len() {
            return Err(Error::invalid(
                "map",
                format!(
                    "{} amplitudes for a {}×{} grid",
                    amplitude_db.len(),
                    field_axis.len(),
                    freq_axis.len()
                ),
            ));
        }
        Ok(Self {
            field_axis,
            freq_axis,
            amplitude_db,
        })
    }

    pub fn field_axis(&self) -> &[f64] {
        &self.field_axis
    }

    pub fn freq_axis(&self) -> &[f64] {
        &self.freq_axis
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitude_db
    }

    pub fn row(&self, field_index: usize) -> &[f64] {
        let w = self.freq_axis.len();
        &self.amplitude_db[field_index * w..(field_index + 1) * w]
    }

    pub fn get(&self, field_index: usize, freq_index: usize) -> f64 {
        self.amplitude_db[field_index * self.freq_axis.len() + freq_index]
    }

    pub fn column(&self, freq_index: usize) -> Vec<f64> {
        (0..self.field_axis.len()).map(|i| self.get(i, freq_index)).collect()
    }

    /// Fixed-frequency trace from the column nearest `f0`.
    pub fn trace_at(&self, f0_ghz: f64) -> Result<Trace> {
        let j = nearest_index(&self.freq_axis, f0_ghz, "frequency")?;
        Ok(Trace {
            freq_ghz: self.freq_axis[j],
            field: self.field_axis.clone(),
            amp_db: self.column(j),
        })
    }

    /// Rows with `min <= H <= max`.
    pub fn crop_fields(&self, min: f64, max: f64) -> Result<SpectralMap> {
        let keep: Vec<usize> = (0..self.field_axis.len())
            .filter(|&i| self.field_axis[i] >= min && self.field_axis[i] <= max)
            .collect();
        let fields = keep.iter().map(|&i| self.field_axis[i]).collect();
        let amps = keep.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        SpectralMap::new(fields, self.freq_axis.clone(), amps)
    }

    /// Largest |T| anywhere in the map, dB.
    pub fn max_db(&self) -> f64 {
        self.amplitude_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(name, "axis is empty"));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(name, "axis has non-finite values"));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(name, "axis must be strictly increasing"));
    }
    Ok(())
}

fn nearest_index(axis: &[f64], value: f64, what: &'static str) -> Result<usize> {
    let (min, max) = (axis[0], axis[axis.len() - 1]);
    if axis.len() > 1 {
        let half = 0.5 * (axis[1] - axis[0]).min(axis[axis.len() - 1] - axis[axis.len() - 2]);
        if value < min - half || value > max + half {
            return Err(Error::OutOfAxis { what, value, min, max });
        }
    } else if value != min {
        return Err(Error::OutOfAxis { what, value, min, max });
    }
    let mut best = 0;
    for (i, v) in axis.iter().enumerate() {
        if (v - value).abs() < (axis[best] - value).abs() {
            best = i;
        }
    }
    Ok(best)
}

/// Optional additive noise for synthetic maps: zero-mean Gaussian on the
/// linear amplitude |T|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub seed: u64,
    /// Standard deviation in linear |T| units; 0 disables noise.
    pub level: f64,
}

/// |T| over the grid with every magnon frequency recomputed per field.
pub fn build_map(
    cavity: &CavityModeParams,
    mat: &MaterialParams,
    modes: &[ModeSpec],
    fields: &[f64],
    freqs: &[f64],
) -> Result<SpectralMap> {
    build_map_with_noise(cavity, mat, modes, fields, freqs, None)
}

pub fn build_map_with_noise(
    cavity: &CavityModeParams,
    mat: &MaterialParams,
    modes: &[ModeSpec],
    fields: &[f64],
    freqs: &[f64],
    noise: Option<NoiseSpec>,
) -> Result<SpectralMap> {
    check_axis("field_axis", fields)?;
    check_axis("freq_axis", freqs)?;
    let noise = noise.filter(|n| n.level > 0.0);
    let dist = match noise {
        Some(n) => Some(Normal::new(0.0, n.level).map_err(|e| Error::invalid("noise.level", e.to_string()))?),
        None => None,
    };
    let rows: Vec<Vec<f64>> = fields
        .par_iter()
        .enumerate()
        .map(|(i, &h)| {
            let magnons = modes_at_field(modes, h, mat)?;
            let mut rng = noise.map(|n| {
                let mut rng = ChaCha8Rng::seed_from_u64(n.seed);
                rng.set_stream(i as u64);
                rng
            });
            Ok(freqs
                .iter()
                .map(|&f| {
                    let mut a = transmission_at(f, cavity, &magnons).norm();
                    if let (Some(rng), Some(dist)) = (rng.as_mut(), dist.as_ref()) {
                        a = (a + dist.sample(rng)).abs().max(f64::MIN_POSITIVE);
                    }
                    amplitude_to_db(a)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    SpectralMap::new(fields.to_vec(), freqs.to_vec(), rows.concat())
}

/// Transmission versus bias field at one probe frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub freq_ghz: f64,
    pub field: Vec<f64>,
    pub amp_db: Vec<f64>,
}

/// Fixed-frequency trace evaluated directly from the model.
pub fn model_trace(
    cavity: &CavityModeParams,
    mat: &MaterialParams,
    modes: &[ModeSpec],
    fields: &[f64],
    f0_ghz: f64,
) -> Result<Trace> {
    let amp_db = fields
        .iter()
        .map(|&h| Ok(transmission_db(f0_ghz, cavity, &modes_at_field(modes, h, mat)?)))
        .collect::<Result<_>>()?;
    Ok(Trace {
        freq_ghz: f0_ghz,
        field: fields.to_vec(),
        amp_db,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub freq_ghz: f64,
    pub amp_db: f64,
}

/// Spectral peaks sorted by frequency.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}

pub fn find_peaks(freqs: &[f64], amp_db: &[f64], prominence_db: f64) -> PeakSet {
    PeakSet {
        peaks: find_maxima(freqs, amp_db, prominence_db)
            .into_iter()
            .map(|e| Peak {
                freq_ghz: e.x,
                amp_db: e.y,
            })
            .collect(),
    }
}

/// Coupling read off a two-peak spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splitting {
    /// Half the peak separation, MHz.
    pub g_mhz: f64,
    /// Full peak separation, MHz.
    pub delta_mhz: f64,
}

pub fn splitting_to_g(peaks: &PeakSet) -> Result<Splitting> {
    if peaks.len() != 2 {
        return Err(Error::PeakCount(peaks.len()));
    }
    let delta_mhz = (peaks.peaks[1].freq_ghz - peaks.peaks[0].freq_ghz).abs() * 1e3;
    Ok(Splitting {
        g_mhz: 0.5 * delta_mhz,
        delta_mhz,
    })
}

/// Bias fields of the anticrossing dips in a fixed-frequency trace,
/// ascending. Dips closer than the field sampling merge into one.
pub fn find_anticrossings(trace: &Trace, prominence_db: f64) -> Vec<f64> {
    find_minima(&trace.field, &trace.amp_db, prominence_db)
        .into_iter()
        .map(|e| e.x)
        .collect()
}
