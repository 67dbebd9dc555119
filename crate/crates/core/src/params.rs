//! Physical constants, parameter types and the scalar relations between them.
//!
//! Units used throughout the crate:
//!
//! * bias fields are μ0·H in tesla,
//! * frequencies are linear (f, not ω) in GHz,
//! * rates (κ, γ, g) are the /2π values in MHz,
//! * the gyromagnetic ratio is linear, in GHz/T.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Vacuum permeability, T·m/A.
    pub mu0: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Bohr magneton, J/T.
    pub mu_b: f64,
    /// Landé g-factor.
    pub lande_g: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            mu0: 1.256_637_062_12e-6,
            hbar: 1.054_571_817e-34,
            mu_b: 9.274_010_078_3e-24,
            lande_g: 2.0,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("constants.mu0", self.mu0),
            ("constants.hbar", self.hbar),
            ("constants.mu_b", self.mu_b),
            ("constants.lande_g", self.lande_g),
        ] {
            positive(key, v)?;
        }
        Ok(())
    }

    /// Angular gyromagnetic ratio g·μB/ħ in rad/(s·T).
    pub fn gyromagnetic_angular(&self) -> f64 {
        self.lande_g * self.mu_b / self.hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Saturation magnetization as μ0·Ms, T.
    pub ms: f64,
    /// Linear gyromagnetic ratio, GHz/T.
    pub gamma_gyro: f64,
    /// Net spins per m³.
    pub spin_density: f64,
    /// Exchange constant in cm². Carried as metadata, never used.
    pub exchange_const: f64,
    /// Default magnon linewidth γ/2π, MHz.
    pub default_linewidth: f64,
}

impl MaterialParams {
    pub fn new(ms: f64, gamma_gyro: f64, spin_density: f64) -> Result<Self> {
        let mat = Self {
            ms,
            gamma_gyro,
            spin_density,
            exchange_const: crate::presets::YIG_EXCHANGE_CONST_CM2,
            default_linewidth: crate::presets::FMR_LINEWIDTH_MHZ,
        };
        mat.validate()?;
        Ok(mat)
    }

    /// Same material with a different (Γ, Ms) pair, e.g. from a fit.
    pub fn with_gamma_ms(&self, gamma_gyro: f64, ms: f64) -> Result<Self> {
        let mat = Self {
            gamma_gyro,
            ms,
            ..*self
        };
        mat.validate()?;
        Ok(mat)
    }

    pub fn validate(&self) -> Result<()> {
        positive("material.Ms", self.ms)?;
        positive("material.gamma_gyro", self.gamma_gyro)?;
        positive("material.spin_density", self.spin_density)?;
        non_negative("material.exchange_const", self.exchange_const)?;
        positive("material.default_linewidth", self.default_linewidth)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereGeometry {
    /// Diameter, m.
    pub diameter: f64,
}

impl SphereGeometry {
    pub fn new(diameter: f64) -> Result<Self> {
        non_negative("material.diameter", diameter)?;
        Ok(Self { diameter })
    }

    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * self.diameter.powi(3) / 6.0
    }
}

/// One cavity resonance with its damping split into port and internal parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityModeParams {
    pub fc_ghz: f64,
    pub q_loaded: f64,
    pub insertion_loss_db: f64,
    /// Per-port damping κc/2π, MHz.
    pub kappa_c_mhz: f64,
    /// Internal damping κint/2π, MHz.
    pub kappa_int_mhz: f64,
}

impl CavityModeParams {
    /// Cavity whose total damping follows from fc/Q_L.
    pub fn from_measurement(fc_ghz: f64, q_loaded: f64, insertion_loss_db: f64) -> Result<Self> {
        positive("cavity.fc", fc_ghz)?;
        positive("cavity.Q_loaded", q_loaded)?;
        let kappa = kappa_total(fc_ghz, q_loaded);
        Self::with_kappa(fc_ghz, q_loaded, insertion_loss_db, kappa)
    }

    /// Cavity with an explicitly given total damping κ/2π (MHz); the
    /// insertion loss still fixes the port/internal split.
    pub fn with_kappa(
        fc_ghz: f64,
        q_loaded: f64,
        insertion_loss_db: f64,
        kappa_mhz: f64,
    ) -> Result<Self> {
        positive("cavity.fc", fc_ghz)?;
        positive("cavity.Q_loaded", q_loaded)?;
        if !(insertion_loss_db <= 0.0) {
            return Err(Error::invalid(
                "cavity.insertion_loss_dB",
                format!("must be <= 0 dB, got {insertion_loss_db}"),
            ));
        }
        positive("cavity.kappa_total", kappa_mhz)?;
        let (kappa_c_mhz, kappa_int_mhz) = split_damping(kappa_mhz, insertion_loss_db);
        Ok(Self {
            fc_ghz,
            q_loaded,
            insertion_loss_db,
            kappa_c_mhz,
            kappa_int_mhz,
        })
    }

    /// Total photonic damping κ/2π = 2κc + κint, MHz.
    pub fn kappa_mhz(&self) -> f64 {
        2.0 * self.kappa_c_mhz + self.kappa_int_mhz
    }
}

/// Magnetostatic mode label (n, m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MsmIndex {
    pub n: u32,
    pub m: i32,
}

impl MsmIndex {
    pub fn new(n: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > n {
            return Err(Error::invalid(
                "mode",
                format!("|m| must not exceed n, got ({n}, {m})"),
            ));
        }
        Ok(Self { n, m })
    }

    /// (m, m) mode of the uniform-like family.
    pub fn mm(m: u32) -> Self {
        Self {
            n: m,
            m: m as i32,
        }
    }

    /// (m+1, m) mode.
    pub fn m1m(m: u32) -> Self {
        Self {
            n: m + 1,
            m: m as i32,
        }
    }

    pub fn family(&self) -> u32 {
        self.n - self.m.unsigned_abs()
    }

    pub fn is_kittel(&self) -> bool {
        self.n == 1 && self.m == 1
    }
}

impl fmt::Display for MsmIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.m)
    }
}

/// One row of an anticrossing summary: resonance field, mode and the
/// coupling figures measured there. `cooperativity` is the printed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnticrossingRecord {
    pub field_t: f64,
    pub mode: MsmIndex,
    pub gamma_mhz: f64,
    pub kappa_mhz: f64,
    pub g_mhz: f64,
    pub cooperativity: f64,
}

/// Internal field Hi = H0 − Ms/3 of a saturated sphere.
pub fn internal_field(h0: f64, mat: &MaterialParams) -> Result<f64> {
    let limit = mat.ms / 3.0;
    if !(h0 > limit) {
        return Err(Error::Unsaturated { h0, limit });
    }
    Ok(h0 - limit)
}

/// Q_i = Q_L / (1 − 10^(IL/20)).
pub fn intrinsic_q(q_loaded: f64, insertion_loss_db: f64) -> Result<f64> {
    positive("Q_loaded", q_loaded)?;
    if !(insertion_loss_db < 0.0) {
        return Err(Error::invalid(
            "insertion_loss_dB",
            format!("must be < 0 dB, got {insertion_loss_db}"),
        ));
    }
    Ok(q_loaded / (1.0 - db_to_amplitude(insertion_loss_db)))
}

/// κ/2π = fc/Q_L, returned in MHz for fc in GHz.
pub fn kappa_total(fc_ghz: f64, q_loaded: f64) -> f64 {
    1000.0 * fc_ghz / q_loaded
}

/// Split κ into (κc, κint) so that the bare-cavity peak 2κc/κ equals the
/// insertion loss.
pub fn decompose_damping(fc_ghz: f64, q_loaded: f64, insertion_loss_db: f64) -> (f64, f64) {
    split_damping(kappa_total(fc_ghz, q_loaded), insertion_loss_db)
}

fn split_damping(kappa: f64, insertion_loss_db: f64) -> (f64, f64) {
    let kappa_c = 0.5 * kappa * db_to_amplitude(insertion_loss_db);
    // 10^(0/20) = 1 gives exactly κ/2 per port, so κint is 0 there.
    let kappa_int = (kappa - 2.0 * kappa_c).max(0.0);
    (kappa_c, kappa_int)
}

/// C = g²/(γκ).
pub fn cooperativity(g_mhz: f64, gamma_mhz: f64, kappa_mhz: f64) -> f64 {
    g_mhz * g_mhz / (gamma_mhz * kappa_mhz)
}

/// Number of net spins in the sphere.
pub fn spin_count(mat: &MaterialParams, geom: &SphereGeometry) -> f64 {
    mat.spin_density * geom.volume()
}

/// Outcome of recomputing a printed cooperativity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CooperativityCheck {
    pub record: AnticrossingRecord,
    pub recomputed: f64,
    pub deviation: f64,
    pub discrepancy: Option<Discrepancy>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discrepancy {
    /// The printed value matches g²/(γκ) once g is replaced by the full
    /// peak separation 2g.
    FullSplittingConvention { recomputed_with_2g: f64 },
    /// No simple convention explains the printed value.
    Unexplained,
}

/// Recompute C for every record and flag rows whose printed value differs
/// by more than `tolerance`.
pub fn audit_cooperativity(records: &[AnticrossingRecord], tolerance: f64) -> Vec<CooperativityCheck> {
    records
        .iter()
        .map(|r| {
            let recomputed = cooperativity(r.g_mhz, r.gamma_mhz, r.kappa_mhz);
            let deviation = recomputed - r.cooperativity;
            let discrepancy = if deviation.abs() <= tolerance {
                None
            } else {
                let with_2g = cooperativity(2.0 * r.g_mhz, r.gamma_mhz, r.kappa_mhz);
                if (with_2g - r.cooperativity).abs() <= tolerance {
                    Some(Discrepancy::FullSplittingConvention {
                        recomputed_with_2g: with_2g,
                    })
                } else {
                    Some(Discrepancy::Unexplained)
                }
            };
            CooperativityCheck {
                record: *r,
                recomputed,
                deviation,
                discrepancy,
            }
        })
        .collect()
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn amplitude_to_db(amplitude: f64) -> f64 {
    20.0 * amplitude.log10()
}

pub(crate) fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("must be > 0, got {v}")))
    }
}

pub(crate) fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("must be >= 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn yig(ms: f64) -> MaterialParams {
        MaterialParams::new(ms, 28.76, 4.22e27).unwrap()
    }

    #[test]
    fn internal_field_values() {
        let hi = internal_field(0.2941, &yig(0.176)).unwrap();
        assert!((hi - 0.235_433_333).abs() < 1e-6);
        let hi = internal_field(0.176 / 3.0 + 0.1, &yig(0.176)).unwrap();
        assert!((hi - 0.1).abs() < 1e-15);
        assert!(matches!(
            internal_field(0.176 / 3.0, &yig(0.176)),
            Err(Error::Unsaturated { .. })
        ));
    }

    #[test]
    fn internal_field_inverts_exactly() {
        let mat = yig(0.176);
        for h0 in [0.06, 0.2941, 0.39, 1.5] {
            let hi = internal_field(h0, &mat).unwrap();
            assert_eq!(hi + mat.ms / 3.0, h0);
        }
    }

    #[test]
    fn intrinsic_q_matches_reported_estimates() {
        let q = intrinsic_q(4000.0, -33.1).unwrap();
        assert!((q - 4090.5).abs() < 0.1, "{q}");
        let q = intrinsic_q(4300.0, -30.16).unwrap();
        assert!((q - 4437.7).abs() < 0.2, "{q}");
        let q = intrinsic_q(4000.0, -400.0).unwrap();
        assert!((q - 4000.0).abs() < 1e-9);
        assert!(intrinsic_q(4000.0, 0.0).is_err());
    }

    #[test]
    fn intrinsic_q_monotone_in_loss() {
        let mut prev = f64::INFINITY;
        for il in [-1.0, -3.0, -10.0, -20.0, -33.1, -60.0] {
            let q = intrinsic_q(4000.0, il).unwrap();
            assert!(q > 4000.0 && q < prev);
            prev = q;
        }
    }

    #[test]
    fn kappa_from_q() {
        assert!((kappa_total(8.401, 4000.0) - 2.100_25).abs() < 1e-9);
        assert!((kappa_total(10.361, 4300.0) - 2.409_535).abs() < 1e-5);
        assert_eq!(kappa_total(1.0, 1000.0), 1.0);
    }

    #[test]
    fn damping_decomposition() {
        let (kc, ki) = decompose_damping(8.401, 4000.0, -33.1);
        assert!((kc - 0.023_24).abs() < 1e-5, "{kc}");
        assert!((ki - 2.053_7).abs() < 1e-4, "{ki}");
        let (kc, ki) = decompose_damping(8.401, 4000.0, 0.0);
        assert_eq!(ki, 0.0);
        assert!((kc - kappa_total(8.401, 4000.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn cooperativity_table_rows() {
        assert!((cooperativity(25.1, 1.6, 2.3) - 171.2).abs() < 0.05);
        assert!((cooperativity(14.4, 2.5, 2.5) - 33.2).abs() < 0.05);
        assert!((cooperativity(53.5, 2.5, 3.2) - 357.78).abs() < 0.01);
    }

    #[test]
    fn audit_flags_only_the_kittel_row() {
        let checks = audit_cooperativity(&presets::TABLE1, 0.15);
        let flagged: Vec<_> = checks.iter().filter(|c| c.discrepancy.is_some()).collect();
        assert_eq!(flagged.len(), 1);
        assert!(flagged[0].record.mode.is_kittel());
        match flagged[0].discrepancy {
            Some(Discrepancy::FullSplittingConvention { recomputed_with_2g }) => {
                assert!((recomputed_with_2g - 1431.1).abs() < 0.1)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn spin_count_scaling() {
        let mat = yig(0.176);
        let n = spin_count(&mat, &SphereGeometry::new(1e-3).unwrap());
        assert!((n / 2.2096e18 - 1.0).abs() < 1e-4, "{n}");
        assert_eq!(spin_count(&mat, &SphereGeometry::new(0.0).unwrap()), 0.0);
        let n2 = spin_count(&mat, &SphereGeometry::new(2e-3).unwrap());
        assert!((n2 / n - 8.0).abs() < 1e-12);
    }

    #[test]
    fn msm_index_family() {
        assert_eq!(MsmIndex::mm(4).family(), 0);
        assert_eq!(MsmIndex::m1m(4).family(), 1);
        assert_eq!(MsmIndex::new(5, -3).unwrap().family(), 2);
        assert!(MsmIndex::new(2, 3).is_err());
        assert_eq!(MsmIndex::m1m(4).to_string(), "(5, 4)");
    }

    #[test]
    fn material_validation_names_key() {
        match MaterialParams::new(0.0, 28.76, 4.22e27) {
            Err(Error::Invalid { key, .. }) => assert_eq!(key, "material.Ms"),
            other => panic!("{other:?}"),
        }
    }
}
