//! Measured constants of the 1 mm YIG sphere in the 44×22×9 mm³ aluminium
//! cavity. Every literature or measured value used by the crate lives here.

use crate::params::{AnticrossingRecord, CavityModeParams, MaterialParams, MsmIndex};
use crate::Result;

/// YIG saturation magnetization, literature value (μ0·Ms, T).
pub const YIG_MS_LITERATURE_T: f64 = 0.178;
/// Saturation magnetization measured on the sphere (μ0·Ms, T).
pub const YIG_MS_MEASURED_T: f64 = 0.176;
/// Gyromagnetic ratio estimated from the TE101 anticrossings, GHz/T.
pub const YIG_GAMMA_FITTED_GHZ_PER_T: f64 = 28.76;
/// Time-resolved dataset estimates: Γ in GHz/T, Ms in T.
pub const TIME_RESOLVED_GAMMA_GHZ_PER_T: f64 = 29.24;
pub const TIME_RESOLVED_MS_T: f64 = 0.149_49;
/// Net spin density, m⁻³.
pub const YIG_SPIN_DENSITY_M3: f64 = 4.22e27;
/// Exchange constant, cm² (metadata).
pub const YIG_EXCHANGE_CONST_CM2: f64 = 3e-12;
/// Magnon damping γ/2π at the Kittel anticrossing, MHz.
pub const FMR_LINEWIDTH_MHZ: f64 = 2.5;
pub const SPHERE_DIAMETER_M: f64 = 1e-3;

/// Inner cavity dimensions, m.
pub const CAVITY_DIMENSIONS_M: [f64; 3] = [44e-3, 22e-3, 9e-3];

/// TE101: resonance, loaded Q, insertion loss, field sweep.
pub const TE101_FC_GHZ: f64 = 8.401;
pub const TE101_Q_LOADED: f64 = 4000.0;
pub const TE101_IL_DB: f64 = -33.1;
pub const TE101_SWEEP_T: (f64, f64) = (0.250, 0.330);
/// κ/2π quoted at full coupling with the Kittel mode, MHz.
pub const TE101_KAPPA_FULL_COUPLING_MHZ: f64 = 3.2;
/// Frequency at which the TE101 anticrossing fields were read off, GHz.
pub const TE101_IDENTIFICATION_FREQ_GHZ: f64 = 8.405;
pub const TE101_FMR_FIELD_T: f64 = 0.2941;

/// TE102 counterparts.
pub const TE102_FC_GHZ: f64 = 10.361;
pub const TE102_Q_LOADED: f64 = 4300.0;
pub const TE102_IL_DB: f64 = -30.16;
pub const TE102_SWEEP_T: (f64, f64) = (0.360, 0.440);
pub const TE102_KAPPA_FULL_COUPLING_MHZ: f64 = 3.0;
pub const TE102_FMR_FIELD_T: f64 = 0.3910;

/// Magnet sweep step, T.
pub const FIELD_STEP_T: f64 = 0.2e-3;
/// Frequency span of each spectrum, MHz.
pub const FREQ_SPAN_MHZ: f64 = 320.0;

/// Pulsed measurement: pulse length (μs) and scope sampling interval (ps).
pub const PULSE_DURATION_US: f64 = 3.0;
pub const SCOPE_SAMPLE_PS: f64 = 125.0;

/// TE101 anticrossing summary, ordered as printed (ascending field).
/// The last column is the printed cooperativity.
pub const TABLE1: [AnticrossingRecord; 10] = [
    row(0.2718, 9, 9, 3.9, 4.0, 4.1, 1.1),
    row(0.2722, 8, 8, 2.9, 4.2, 4.7, 1.8),
    row(0.2728, 7, 7, 3.1, 3.3, 5.8, 3.3),
    row(0.2734, 6, 6, 3.1, 3.1, 7.1, 5.2),
    row(0.2746, 5, 5, 3.0, 3.1, 8.7, 8.1),
    row(0.2760, 4, 4, 3.1, 2.8, 10.9, 13.6),
    row(0.2780, 3, 3, 2.5, 2.5, 14.4, 33.2),
    row(0.2826, 2, 2, 1.6, 2.3, 25.1, 171.2),
    row(0.2882, 5, 4, 2.0, 4.0, 8.0, 8.0),
    row(0.2941, 1, 1, 2.5, 3.2, 53.5, 1431.1),
];

const fn row(
    field_t: f64,
    n: u32,
    m: i32,
    gamma_mhz: f64,
    kappa_mhz: f64,
    g_mhz: f64,
    cooperativity: f64,
) -> AnticrossingRecord {
    AnticrossingRecord {
        field_t,
        mode: MsmIndex { n, m },
        gamma_mhz,
        kappa_mhz,
        g_mhz,
        cooperativity,
    }
}

/// Full geometric cavity volume, m³.
pub fn cavity_volume_m3() -> f64 {
    CAVITY_DIMENSIONS_M.iter().product()
}

/// YIG with the fitted (Γ, Ms) pair.
pub fn yig() -> MaterialParams {
    MaterialParams {
        ms: YIG_MS_MEASURED_T,
        gamma_gyro: YIG_GAMMA_FITTED_GHZ_PER_T,
        spin_density: YIG_SPIN_DENSITY_M3,
        exchange_const: YIG_EXCHANGE_CONST_CM2,
        default_linewidth: FMR_LINEWIDTH_MHZ,
    }
}

/// Named cavity modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavityPreset {
    Te101,
    Te102,
}

impl CavityPreset {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "TE101" => Some(Self::Te101),
            "TE102" => Some(Self::Te102),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Te101 => "TE101",
            Self::Te102 => "TE102",
        }
    }

    /// (fc GHz, Q_L, IL dB).
    pub fn measurement(self) -> (f64, f64, f64) {
        match self {
            Self::Te101 => (TE101_FC_GHZ, TE101_Q_LOADED, TE101_IL_DB),
            Self::Te102 => (TE102_FC_GHZ, TE102_Q_LOADED, TE102_IL_DB),
        }
    }

    pub fn sweep(self) -> (f64, f64) {
        match self {
            Self::Te101 => TE101_SWEEP_T,
            Self::Te102 => TE102_SWEEP_T,
        }
    }

    pub fn kappa_full_coupling_mhz(self) -> f64 {
        match self {
            Self::Te101 => TE101_KAPPA_FULL_COUPLING_MHZ,
            Self::Te102 => TE102_KAPPA_FULL_COUPLING_MHZ,
        }
    }

    /// Cavity with κ from fc/Q_L.
    pub fn cavity(self) -> Result<CavityModeParams> {
        let (fc, q, il) = self.measurement();
        CavityModeParams::from_measurement(fc, q, il)
    }
}
