//! Pulsed coupled-mode dynamics in the frame rotating at the drive
//! frequency:
//!
//! ```text
//! da/dt  = (jΔc − κ/2)·a − j·Σ g_i b_i + √κc·ε(t)
//! db_i/dt = (jΔi − γi/2)·b_i − j·g_i·a
//! ```
//!
//! Time is in μs and rates in rad/μs (2π × MHz). The recorded envelope is
//! `√κc·|a|`, whose steady state equals `ε·|T|` of the transmission model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modeid::{self, Family, IdentParams};
use crate::params::{positive, CavityModeParams, MaterialParams};
use crate::peaks::{find_maxima, find_minima};
use crate::presets::{PULSE_DURATION_US, SCOPE_SAMPLE_PS};
use crate::transmission::{check_axis, modes_at_field, MagnonModeEntry, ModeSpec};

/// Integrator steps per output sample.
pub const SUBSTEPS: usize = 4;
/// Largest |λ·dt| accepted, inside the RK4 stability region.
const MAX_STEP_PRODUCT: f64 = 2.5;
/// Output samples per Rabi period required.
const MIN_SAMPLES_PER_BEAT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub duration_us: f64,
    pub drive_freq_ghz: f64,
    /// Drive amplitude ε, arbitrary linear units.
    pub amplitude: f64,
    pub record_us: f64,
    pub sample_ps: f64,
}

impl PulseSpec {
    pub fn new(duration_us: f64, drive_freq_ghz: f64, amplitude: f64, record_us: f64, sample_ps: f64) -> Result<Self> {
        let p = Self {
            duration_us,
            drive_freq_ghz,
            amplitude,
            record_us,
            sample_ps,
        };
        p.validate()?;
        Ok(p)
    }

    /// 3 μs pulse at `drive_freq_ghz`, 125 ps sampling, a 2 μs tail.
    pub fn standard(drive_freq_ghz: f64) -> Self {
        Self {
            duration_us: PULSE_DURATION_US,
            drive_freq_ghz,
            amplitude: 1.0,
            record_us: PULSE_DURATION_US + 2.0,
            sample_ps: SCOPE_SAMPLE_PS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("pulse.duration", self.duration_us)?;
        positive("pulse.drive_freq", self.drive_freq_ghz)?;
        positive("pulse.sample_interval", self.sample_ps)?;
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("pulse.amplitude", "must be finite"));
        }
        if !(self.record_us >= self.duration_us) {
            return Err(Error::invalid(
                "pulse.record_length",
                format!("{} μs is shorter than the pulse ({} μs)", self.record_us, self.duration_us),
            ));
        }
        Ok(())
    }

    pub fn sample_us(&self) -> f64 {
        self.sample_ps * 1e-6
    }

    pub fn step_us(&self) -> f64 {
        self.sample_us() / SUBSTEPS as f64
    }

    fn samples(&self) -> usize {
        (self.record_us / self.sample_us()).round() as usize + 1
    }

    /// Integrator steps with the drive on; the pulse edge snaps to the step grid.
    fn on_steps(&self) -> usize {
        (self.duration_us / self.step_us()).round() as usize
    }
}

/// Envelope sampled on a uniform grid starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeTrace {
    pub t_us: Vec<f64>,
    pub env: Vec<f64>,
    /// Time the drive switched off, μs.
    pub pulse_off_us: f64,
}

impl EnvelopeTrace {
    /// Index of the first sample at or after pulse-off.
    pub fn tail_start(&self) -> usize {
        self.t_us.partition_point(|&t| t < self.pulse_off_us - 1e-12)
    }

    /// Envelope at the last sample with the drive on.
    pub fn steady_value(&self) -> f64 {
        let i = self.tail_start();
        self.env[i.min(self.env.len() - 1)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseDynamics {
    pub trace: EnvelopeTrace,
    /// Cavity amplitude at each output sample.
    pub a: Vec<Complex64>,
    /// |a|² + Σ|b_i|² at each output sample.
    pub energy: Vec<f64>,
    /// Largest relative energy increase over one step with the drive off.
    pub max_energy_rise: f64,
}

pub fn simulate_pulse(cavity: &CavityModeParams, magnons: &[MagnonModeEntry], pulse: &PulseSpec) -> Result<EnvelopeTrace> {
    Ok(simulate_pulse_detailed(cavity, magnons, pulse)?.trace)
}

struct System {
    ca: Complex64,
    cb: Vec<Complex64>,
    g: Vec<f64>,
    drive: f64,
}

impl System {
    fn new(cavity: &CavityModeParams, magnons: &[MagnonModeEntry], pulse: &PulseSpec) -> Self {
        let w = 2.0 * PI;
        let detune = |f: f64| w * 1e3 * (f - pulse.drive_freq_ghz);
        Self {
            ca: Complex64::new(-0.5 * w * cavity.kappa_mhz(), detune(cavity.fc_ghz)),
            cb: magnons
                .iter()
                .map(|m| Complex64::new(-0.5 * w * m.gamma_mhz, detune(m.freq_ghz)))
                .collect(),
            g: magnons.iter().map(|m| w * m.g_mhz).collect(),
            drive: (w * cavity.kappa_c_mhz).sqrt() * pulse.amplitude,
        }
    }

    /// Gershgorin bound on the spectral radius of the system matrix.
    fn spectral_bound(&self) -> f64 {
        let gsum: f64 = self.g.iter().sum();
        let cav = self.ca.norm() + gsum;
        self.cb
            .iter()
            .zip(&self.g)
            .map(|(c, g)| c.norm() + g)
            .fold(cav, f64::max)
    }

    fn rhs(&self, y: &[Complex64], on: bool, out: &mut [Complex64]) {
        let j = Complex64::i();
        let a = y[0];
        let mut da = self.ca * a + if on { Complex64::new(self.drive, 0.0) } else { Complex64::new(0.0, 0.0) };
        for (i, (&cb, &g)) in self.cb.iter().zip(&self.g).enumerate() {
            let b = y[i + 1];
            da -= j * g * b;
            out[i + 1] = cb * b - j * g * a;
        }
        out[0] = da;
    }
}

fn energy(y: &[Complex64]) -> f64 {
    y.iter().map(|c| c.norm_sqr()).sum()
}

/// Fixed-step RK4 with the full state history at output samples.
pub fn simulate_pulse_detailed(
    cavity: &CavityModeParams,
    magnons: &[MagnonModeEntry],
    pulse: &PulseSpec,
) -> Result<PulseDynamics> {
    pulse.validate()?;
    for m in magnons {
        positive("mode.gamma", m.gamma_mhz)?;
    }
    positive("cavity.kappa", cavity.kappa_mhz())?;
    let sys = System::new(cavity, magnons, pulse);
    let dt = pulse.step_us();
    let product = sys.spectral_bound() * dt;
    if product > MAX_STEP_PRODUCT {
        return Err(Error::Unstable {
            step_ps: dt * 1e6,
            reason: format!("|λ|·dt = {product:.3} exceeds {MAX_STEP_PRODUCT}"),
        });
    }
    let g_max = magnons.iter().map(|m| m.g_mhz).fold(0.0, f64::max);
    if g_max > 0.0 {
        let beat_us = 1.0 / (2.0 * g_max);
        if beat_us < MIN_SAMPLES_PER_BEAT * pulse.sample_us() {
            return Err(Error::Unstable {
                step_ps: dt * 1e6,
                reason: format!(
                    "{} ps sampling resolves the {:.3} ns beat fewer than {MIN_SAMPLES_PER_BEAT} times",
                    pulse.sample_ps,
                    beat_us * 1e3
                ),
            });
        }
    }

    let n = 1 + magnons.len();
    let samples = pulse.samples();
    let on_steps = pulse.on_steps();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut k = [vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n]];
    let mut a = Vec::with_capacity(samples);
    let mut en = Vec::with_capacity(samples);
    let mut max_rise: f64 = 0.0;
    a.push(y[0]);
    en.push(0.0);
    for s in 1..samples {
        for sub in 0..SUBSTEPS {
            let step = (s - 1) * SUBSTEPS + sub;
            let on = step < on_steps;
            let before = energy(&y);
            sys.rhs(&y, on, &mut k[0]);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * dt * k[0][i];
            }
            sys.rhs(&tmp, on, &mut k[1]);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * dt * k[1][i];
            }
            sys.rhs(&tmp, on, &mut k[2]);
            for i in 0..n {
                tmp[i] = y[i] + dt * k[2][i];
            }
            sys.rhs(&tmp, on, &mut k[3]);
            for i in 0..n {
                y[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
            if !on && before > 0.0 {
                max_rise = max_rise.max((energy(&y) - before) / before);
            }
        }
        a.push(y[0]);
        en.push(energy(&y));
    }
    let kc_sqrt = (2.0 * PI * cavity.kappa_c_mhz).sqrt();
    let sample = pulse.sample_us();
    Ok(PulseDynamics {
        trace: EnvelopeTrace {
            t_us: (0..samples).map(|i| i as f64 * sample).collect(),
            env: a.iter().map(|c| kc_sqrt * c.norm()).collect(),
            pulse_off_us: on_steps as f64 * dt,
        },
        a,
        energy: en,
        max_energy_rise: max_rise,
    })
}

/// Envelope traces over a field grid, row-major with the field outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFieldMap {
    field_axis: Vec<f64>,
    time_axis: Vec<f64>,
    envelope: Vec<f64>,
    pulse_off_us: f64,
}

impl TimeFieldMap {
    pub fn new(field_axis: Vec<f64>, time_axis: Vec<f64>, envelope: Vec<f64>, pulse_off_us: f64) -> Result<Self> {
        check_axis("field_axis", &field_axis)?;
        check_axis("time_axis", &time_axis)?;
        if envelope.len() != field_axis.len() * time_axis.len() {
            return Err(Error::invalid("time_map", "envelope length does not match the axes"));
        }
        Ok(Self {
            field_axis,
            time_axis,
            envelope,
            pulse_off_us,
        })
    }

    pub fn field_axis(&self) -> &[f64] {
        &self.field_axis
    }

    pub fn time_axis(&self) -> &[f64] {
        &self.time_axis
    }

    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn pulse_off_us(&self) -> f64 {
        self.pulse_off_us
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.time_axis.len();
        &self.envelope[i * w..(i + 1) * w]
    }

    /// Envelope versus field at the sample nearest `t_us`.
    pub fn at_time(&self, t_us: f64) -> Vec<f64> {
        let j = modeid::nearest_row(&self.time_axis, t_us);
        (0..self.field_axis.len()).map(|i| self.row(i)[j]).collect()
    }

    /// Every `stride`-th time sample.
    pub fn decimate(&self, stride: usize) -> Result<TimeFieldMap> {
        if stride == 0 {
            return Err(Error::invalid("output.time_stride", "must be >= 1"));
        }
        let cols: Vec<usize> = (0..self.time_axis.len()).step_by(stride).collect();
        let time = cols.iter().map(|&j| self.time_axis[j]).collect();
        let env = (0..self.field_axis.len())
            .flat_map(|i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.row(i)[j])
            .collect();
        TimeFieldMap::new(self.field_axis.clone(), time, env, self.pulse_off_us)
    }

    /// Rows re-indexed on the ascending index coordinate.
    pub fn rescaled(&self, params: &IdentParams, family: Family) -> Result<TimeFieldMap> {
        let (coords, order) = modeid::rescale_axis(&self.field_axis, params, family)?;
        let env = order.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        TimeFieldMap::new(coords, self.time_axis.clone(), env, self.pulse_off_us)
    }

    /// Rows strictly above the accumulation field.
    pub fn crop_above_accumulation(&self, params: &IdentParams) -> Result<TimeFieldMap> {
        let pole = params.accumulation_field();
        let start = self.field_axis.partition_point(|&h| h <= pole);
        if start == self.field_axis.len() {
            return Err(Error::Singular {
                field: self.field_axis[start - 1],
                pole,
            });
        }
        let w = self.time_axis.len();
        TimeFieldMap::new(
            self.field_axis[start..].to_vec(),
            self.time_axis.clone(),
            self.envelope[start * w..].to_vec(),
            self.pulse_off_us,
        )
    }
}

/// One pulse simulation per field, magnon frequencies from the closed-form
/// dispersion; output decimated by `time_stride`.
pub fn time_field_map(
    cavity: &CavityModeParams,
    mat: &MaterialParams,
    modes: &[ModeSpec],
    fields: &[f64],
    pulse: &PulseSpec,
    time_stride: usize,
) -> Result<TimeFieldMap> {
    check_axis("field_axis", fields)?;
    if time_stride == 0 {
        return Err(Error::invalid("output.time_stride", "must be >= 1"));
    }
    let traces: Vec<EnvelopeTrace> = fields
        .par_iter()
        .map(|&h| simulate_pulse(cavity, &modes_at_field(modes, h, mat)?, pulse))
        .collect::<Result<_>>()?;
    let first = &traces[0];
    let time: Vec<f64> = first.t_us.iter().step_by(time_stride).copied().collect();
    let env = traces
        .iter()
        .flat_map(|t| t.env.iter().step_by(time_stride).copied())
        .collect();
    TimeFieldMap::new(fields.to_vec(), time, env, first.pulse_off_us)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiEstimate {
    pub period_ns: f64,
    /// 1/(2·period), MHz.
    pub g_mhz: f64,
    pub minima: usize,
}

/// Relative prominence below which ringdown extrema are ignored.
const EXTREMUM_FLOOR: f64 = 1e-3;

fn tail(trace: &EnvelopeTrace) -> (&[f64], &[f64]) {
    let i = trace.tail_start();
    (&trace.t_us[i..], &trace.env[i..])
}

/// Mean spacing of the envelope minima after pulse-off.
pub fn rabi_period(trace: &EnvelopeTrace) -> Result<RabiEstimate> {
    let (t, env) = tail(trace);
    let peak = env.iter().copied().fold(0.0, f64::max);
    let floor = EXTREMUM_FLOOR * peak;
    let minima: Vec<f64> = find_minima(t, env, floor)
        .into_iter()
        .filter(|e| e.prominence >= floor)
        .map(|e| e.x)
        .collect();
    let maxima = find_maxima(t, env, floor).len();
    if minima.len() + maxima < 3 || minima.len() < 2 {
        return Err(Error::InsufficientOscillation(format!(
            "{} minima and {maxima} maxima after pulse-off",
            minima.len()
        )));
    }
    let period_us = (minima[minima.len() - 1] - minima[0]) / (minima.len() - 1) as f64;
    Ok(RabiEstimate {
        period_ns: period_us * 1e3,
        g_mhz: 1.0 / (2.0 * period_us),
        minima: minima.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingdownFit {
    /// Decay rate of the stored energy /2π, MHz.
    pub energy_rate_mhz: f64,
    /// Decay rate of the envelope amplitude /2π, MHz (half the energy rate).
    pub amplitude_rate_mhz: f64,
    pub points: usize,
}

/// Log-linear fit of the post-pulse envelope: through the oscillation peaks
/// when the tail beats, through every sample otherwise.
pub fn ringdown_rate(trace: &EnvelopeTrace) -> Result<RingdownFit> {
    let (t, env) = tail(trace);
    let start = env.iter().copied().fold(0.0, f64::max);
    if !(start > 0.0) {
        return Err(Error::InsufficientTail("envelope is zero after pulse-off".into()));
    }
    let peaks = find_maxima(t, env, EXTREMUM_FLOOR * start);
    let (xs, ys): (Vec<f64>, Vec<f64>) = if peaks.len() >= 3 {
        let beat = (peaks[peaks.len() - 1].x - peaks[0].x) / (peaks.len() - 1) as f64;
        let span = t[t.len() - 1] - t[0];
        if span < 5.0 * beat {
            return Err(Error::InsufficientTail(format!(
                "{span:.3} μs tail covers fewer than 5 beats of {beat:.4} μs"
            )));
        }
        peaks.iter().filter(|p| p.y > 0.0).map(|p| (p.x, p.y.ln())).unzip()
    } else if !peaks.is_empty() {
        return Err(Error::InsufficientTail(format!(
            "{} beat peaks after pulse-off; need 5 beat periods",
            peaks.len()
        )));
    } else {
        let floor = 1e-12 * start;
        t.iter()
            .zip(env)
            .filter(|(_, &e)| e > floor)
            .map(|(&x, &e)| (x, e.ln()))
            .unzip()
    };
    if xs.len() < 3 {
        return Err(Error::InsufficientTail(format!("{} usable points after pulse-off", xs.len())));
    }
    let slope = linear_slope(&xs, &ys);
    let amplitude_rate_mhz = -slope / (2.0 * PI);
    Ok(RingdownFit {
        energy_rate_mhz: 2.0 * amplitude_rate_mhz,
        amplitude_rate_mhz,
        points: xs.len(),
    })
}

fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
