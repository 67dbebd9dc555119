//! Magnon-photon coupling strength: single-spin coupling, collective
//! enhancement by √N and the spatial overlap coefficient η.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{positive, PhysicalConstants};
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeDefinition {
    FullCavity,
    UserSupplied,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalVolume {
    pub volume_m3: f64,
    pub definition: VolumeDefinition,
}

impl ModalVolume {
    /// Geometric volume of the 44×22×9 mm³ cavity.
    pub fn full_cavity() -> Self {
        Self {
            volume_m3: presets::cavity_volume_m3(),
            definition: VolumeDefinition::FullCavity,
        }
    }

    pub fn user(volume_m3: f64) -> Result<Self> {
        positive("coupling.modal_volume", volume_m3)?;
        Ok(Self {
            volume_m3,
            definition: VolumeDefinition::UserSupplied,
        })
    }
}

/// g0/2π in Hz: η·Γ·√(μ0 ħ ωc / Vc)/2π with Γ = g·μB/ħ.
pub fn single_spin_coupling(
    fc_ghz: f64,
    volume: &ModalVolume,
    eta: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    positive("cavity.fc", fc_ghz)?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("coupling.eta", format!("must be in [0, 1], got {eta}")));
    }
    let omega_c = 2.0 * PI * fc_ghz * 1e9;
    let vacuum_field = (consts.mu0 * consts.hbar * omega_c / volume.volume_m3).sqrt();
    Ok(eta * consts.gyromagnetic_angular() * vacuum_field / (2.0 * PI))
}

/// Collective coupling g/2π = g0/2π·√N, converted from Hz to MHz.
pub fn ensemble_coupling(g0_hz: f64, spins: f64) -> Result<f64> {
    if !(spins >= 0.0) {
        return Err(Error::invalid("coupling.spins", format!("must be >= 0, got {spins}")));
    }
    Ok(g0_hz * spins.sqrt() * 1e-6)
}

/// One cell of a field sampling of the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub position: [f64; 3],
    /// Cell volume dV, m³.
    pub weight: f64,
    /// Microwave magnetic field (arbitrary units).
    pub h: [f64; 3],
    /// Off-axis magnetization of the mode (arbitrary units).
    pub m: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSampleGrid {
    points: Vec<FieldSample>,
    h_max: f64,
    m_max: f64,
    volume: f64,
}

impl FieldSampleGrid {
    pub fn new(points: Vec<FieldSample>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateGrid("no sample points".into()));
        }
        if let Some(bad) = points.iter().find(|p| !(p.weight > 0.0)) {
            return Err(Error::DegenerateGrid(format!(
                "non-positive weight {} at {:?}",
                bad.weight, bad.position
            )));
        }
        let h_max = points.iter().map(|p| norm(p.h)).fold(0.0, f64::max);
        let m_max = points.iter().map(|p| norm(p.m)).fold(0.0, f64::max);
        let volume = points.iter().map(|p| p.weight).sum();
        Ok(Self {
            points,
            h_max,
            m_max,
            volume,
        })
    }

    pub fn points(&self) -> &[FieldSample] {
        &self.points
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn m_max(&self) -> f64 {
        self.m_max
    }

    /// Sum of the cell volumes, taken as the sphere volume.
    pub fn volume(&self) -> f64 {
        self.volume
    }
}

/// η = Σ H·M dV / (Hmax·Mmax·V).
pub fn overlap_eta(grid: &FieldSampleGrid) -> Result<f64> {
    let norm = grid.h_max * grid.m_max * grid.volume;
    if !(norm > 0.0) {
        return Err(Error::DegenerateGrid("Hmax·Mmax vanishes".into()));
    }
    let sum: f64 = grid
        .points
        .iter()
        .map(|p| dot(p.h, p.m) * p.weight)
        .sum();
    Ok(sum / norm)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}
