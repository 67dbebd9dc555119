//! JSON run configuration. Every section and key is optional; missing
//! values fall back to the TE101 scenario.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modeid::{Family, IdentifyOptions, DEFAULT_TOLERANCE, MAX_BOOTSTRAP_ITERATIONS};
use crate::params::{positive, CavityModeParams, MaterialParams, MsmIndex, PhysicalConstants, SphereGeometry};
use crate::presets::{self, CavityPreset};
use crate::timedomain::PulseSpec;
use crate::transmission::{
    centered_axis, field_axis, ModeSpec, NoiseSpec, DEFAULT_FREQ_POINTS, DIP_PROMINENCE_DB, PEAK_PROMINENCE_DB,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub constants: ConstantsConfig,
    pub material: MaterialConfig,
    pub cavity: CavityConfig,
    pub modes: ModesConfig,
    pub sweep: SweepConfig,
    pub pulse: PulseConfig,
    pub detector: DetectorConfig,
    pub noise: NoiseConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    pub mu0: f64,
    pub hbar: f64,
    pub mu_b: f64,
    pub lande_g: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        let c = PhysicalConstants::default();
        Self {
            mu0: c.mu0,
            hbar: c.hbar,
            mu_b: c.mu_b,
            lande_g: c.lande_g,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialConfig {
    /// μ0·Ms, T.
    #[serde(rename = "Ms")]
    pub ms: f64,
    /// GHz/T.
    pub gamma_gyro: f64,
    /// Spins per m³.
    pub spin_density: f64,
    /// cm².
    pub exchange_const: f64,
    /// γ/2π for modes that give none, MHz.
    pub default_linewidth: f64,
    /// Sphere diameter, m.
    pub diameter: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        let y = presets::yig();
        Self {
            ms: y.ms,
            gamma_gyro: y.gamma_gyro,
            spin_density: y.spin_density,
            exchange_const: y.exchange_const,
            default_linewidth: y.default_linewidth,
            diameter: presets::SPHERE_DIAMETER_M,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityConfig {
    pub preset: String,
    /// GHz.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fc: Option<f64>,
    #[serde(rename = "Q_loaded", skip_serializing_if = "Option::is_none")]
    pub q_loaded: Option<f64>,
    #[serde(rename = "insertion_loss_dB", skip_serializing_if = "Option::is_none")]
    pub insertion_loss_db: Option<f64>,
    /// κ/2π in MHz; when absent κ = fc/Q_L.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_total: Option<f64>,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            preset: CavityPreset::Te101.name().to_string(),
            fc: None,
            q_loaded: None,
            insertion_loss_db: None,
            kappa_total: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModesConfig {
    /// The ten TE101 anticrossings with their (g, γ).
    #[default]
    Table1,
    List { entries: Vec<ModeEntryConfig> },
    /// Families `families` for m = 1..=m_max, all with the same (g, γ).
    Auto {
        m_max: u32,
        #[serde(default = "default_families")]
        families: Vec<u32>,
        g: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
}

fn default_families() -> Vec<u32> {
    vec![0, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntryConfig {
    pub n: u32,
    pub m: i32,
    /// g/2π, MHz.
    pub g: f64,
    /// γ/2π, MHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// T; preset sweep when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_max: Option<f64>,
    pub field_step: f64,
    /// GHz; fc when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_center: Option<f64>,
    pub freq_span_mhz: f64,
    pub freq_points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            field_min: None,
            field_max: None,
            field_step: presets::FIELD_STEP_T,
            freq_center: None,
            freq_span_mhz: presets::FREQ_SPAN_MHZ,
            freq_points: DEFAULT_FREQ_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub duration_us: f64,
    /// GHz; fc when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_freq: Option<f64>,
    pub amplitude: f64,
    pub record_us: f64,
    pub sample_ps: f64,
    /// Keep every n-th time sample in time×field rasters.
    pub time_stride: usize,
}

impl Default for PulseConfig {
    fn default() -> Self {
        let p = PulseSpec::standard(presets::TE101_FC_GHZ);
        Self {
            duration_us: p.duration_us,
            drive_freq: None,
            amplitude: p.amplitude,
            record_us: p.record_us,
            sample_ps: p.sample_ps,
            time_stride: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub peak_prominence_db: f64,
    pub dip_prominence_db: f64,
    /// Frequency of the anticrossing trace, GHz; fc when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_freq: Option<f64>,
    pub tolerance: f64,
    /// Ms for the first identification pass, T.
    pub ms_initial: f64,
    pub max_iterations: usize,
    /// Family used for rescaled maps.
    pub family: Family,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            peak_prominence_db: PEAK_PROMINENCE_DB,
            dip_prominence_db: DIP_PROMINENCE_DB,
            trace_freq: None,
            tolerance: DEFAULT_TOLERANCE,
            ms_initial: presets::YIG_MS_LITERATURE_T,
            max_iterations: MAX_BOOTSTRAP_ITERATIONS,
            family: Family::Mm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub seed: u64,
    /// Gaussian σ on linear |T|; 0 disables noise.
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub map: String,
    pub msm_table: String,
    pub assignments: String,
    pub fit: String,
    pub trace: String,
    pub raster: String,
    pub image: String,
    /// `gray` or `viridis`.
    pub palette: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            map: "map.csv".into(),
            msm_table: "msm_table.csv".into(),
            assignments: "assignments.csv".into(),
            fit: "fit.json".into(),
            trace: "trace.csv".into(),
            raster: "raster.csv".into(),
            image: "map.ppm".into(),
            palette: "viridis".into(),
        }
    }
}

/// Every derived object a pipeline needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub constants: PhysicalConstants,
    pub material: MaterialParams,
    pub sphere: SphereGeometry,
    pub preset: CavityPreset,
    pub cavity: CavityModeParams,
    pub modes: Vec<ModeSpec>,
    pub fields: Vec<f64>,
    pub freqs: Vec<f64>,
    pub pulse: PulseSpec,
    pub time_stride: usize,
    pub noise: Option<NoiseSpec>,
    pub trace_freq: f64,
    pub peak_prominence_db: f64,
    pub dip_prominence_db: f64,
    pub identify: IdentifyOptions,
    pub family: Family,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(map_serde_error)?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates every key and builds the derived objects.
    pub fn resolve(&self) -> Result<Scenario> {
        let c = &self.constants;
        let constants = PhysicalConstants {
            mu0: c.mu0,
            hbar: c.hbar,
            mu_b: c.mu_b,
            lande_g: c.lande_g,
        };
        constants.validate()?;

        let m = &self.material;
        let material = MaterialParams {
            ms: m.ms,
            gamma_gyro: m.gamma_gyro,
            spin_density: m.spin_density,
            exchange_const: m.exchange_const,
            default_linewidth: m.default_linewidth,
        };
        material.validate()?;
        positive("material.diameter", m.diameter)?;
        let sphere = SphereGeometry::new(m.diameter)?;

        let preset = CavityPreset::parse(&self.cavity.preset).ok_or_else(|| {
            Error::invalid(
                "cavity.preset",
                format!("unknown preset {:?}; expected TE101 or TE102", self.cavity.preset),
            )
        })?;
        let (fc0, q0, il0) = preset.measurement();
        let fc = self.cavity.fc.unwrap_or(fc0);
        let q = self.cavity.q_loaded.unwrap_or(q0);
        let il = self.cavity.insertion_loss_db.unwrap_or(il0);
        let cavity = match self.cavity.kappa_total {
            Some(k) => CavityModeParams::with_kappa(fc, q, il, k)?,
            None => CavityModeParams::from_measurement(fc, q, il)?,
        };

        let modes = self.resolve_modes(&material)?;

        let s = &self.sweep;
        let (lo0, hi0) = preset.sweep();
        positive("sweep.field_step", s.field_step)?;
        let lo = s.field_min.unwrap_or(lo0);
        let hi = s.field_max.unwrap_or(hi0);
        if !(hi > lo) {
            return Err(Error::invalid("sweep.field_max", format!("{hi} T must exceed sweep.field_min = {lo} T")));
        }
        if !(lo > material.ms / 3.0) {
            return Err(Error::invalid(
                "sweep.field_min",
                format!("{lo} T does not saturate the sphere (Ms/3 = {} T)", material.ms / 3.0),
            ));
        }
        let fields = field_axis(lo, hi, s.field_step)?;
        positive("sweep.freq_span_mhz", s.freq_span_mhz)?;
        if s.freq_points < 2 {
            return Err(Error::invalid("sweep.freq_points", "must be >= 2"));
        }
        let center = s.freq_center.unwrap_or(cavity.fc_ghz);
        positive("sweep.freq_center", center)?;
        let freqs = centered_axis(center, s.freq_span_mhz, s.freq_points)?;

        let p = &self.pulse;
        let pulse = PulseSpec {
            duration_us: p.duration_us,
            drive_freq_ghz: p.drive_freq.unwrap_or(cavity.fc_ghz),
            amplitude: p.amplitude,
            record_us: p.record_us,
            sample_ps: p.sample_ps,
        };
        pulse.validate()?;
        if p.time_stride == 0 {
            return Err(Error::invalid("pulse.time_stride", "must be >= 1"));
        }

        let d = &self.detector;
        for (key, v) in [
            ("detector.peak_prominence_db", d.peak_prominence_db),
            ("detector.dip_prominence_db", d.dip_prominence_db),
        ] {
            if !(v >= 0.0) {
                return Err(Error::invalid(key, format!("must be >= 0, got {v}")));
            }
        }
        if !(d.tolerance > 0.0 && d.tolerance < 0.5) {
            return Err(Error::invalid("detector.tolerance", format!("must be in (0, 0.5), got {}", d.tolerance)));
        }
        positive("detector.ms_initial", d.ms_initial)?;
        if d.max_iterations == 0 {
            return Err(Error::invalid("detector.max_iterations", "must be >= 1"));
        }
        let trace_freq = d.trace_freq.unwrap_or(cavity.fc_ghz);
        positive("detector.trace_freq", trace_freq)?;

        if !(self.noise.level >= 0.0 && self.noise.level.is_finite()) {
            return Err(Error::invalid("noise.level", format!("must be >= 0, got {}", self.noise.level)));
        }
        let noise = (self.noise.level > 0.0).then_some(NoiseSpec {
            seed: self.noise.seed,
            level: self.noise.level,
        });

        if !matches!(self.output.palette.as_str(), "gray" | "viridis") {
            return Err(Error::invalid(
                "output.palette",
                format!("expected gray or viridis, got {:?}", self.output.palette),
            ));
        }

        Ok(Scenario {
            constants,
            material,
            sphere,
            preset,
            cavity,
            modes,
            fields,
            freqs,
            pulse,
            time_stride: p.time_stride,
            noise,
            trace_freq,
            peak_prominence_db: d.peak_prominence_db,
            dip_prominence_db: d.dip_prominence_db,
            identify: IdentifyOptions {
                tolerance: d.tolerance,
                ms_initial: d.ms_initial,
                max_iterations: d.max_iterations,
            },
            family: d.family,
        })
    }

    fn resolve_modes(&self, mat: &MaterialParams) -> Result<Vec<ModeSpec>> {
        let check = |key: String, idx: MsmIndex, g: f64, gamma: f64| -> Result<ModeSpec> {
            if idx.m <= 0 || idx.family() > 1 {
                return Err(Error::invalid(
                    key,
                    format!("{idx} has no closed-form dispersion (need m >= 1 and n - |m| in {{0, 1}})"),
                ));
            }
            ModeSpec::new(idx, g, gamma).map_err(|e| match e {
                Error::Invalid { reason, .. } => Error::Invalid { key, reason },
                other => other,
            })
        };
        match &self.modes {
            ModesConfig::Table1 => presets::TABLE1
                .iter()
                .map(|r| ModeSpec::new(r.mode, r.g_mhz, r.gamma_mhz))
                .collect(),
            ModesConfig::List { entries } => entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let idx = MsmIndex::new(e.n, e.m).map_err(|err| match err {
                        Error::Invalid { reason, .. } => Error::invalid(format!("modes.entries[{i}]"), reason),
                        other => other,
                    })?;
                    check(
                        format!("modes.entries[{i}]"),
                        idx,
                        e.g,
                        e.gamma.unwrap_or(mat.default_linewidth),
                    )
                })
                .collect(),
            ModesConfig::Auto {
                m_max,
                families,
                g,
                gamma,
            } => {
                if *m_max == 0 {
                    return Err(Error::invalid("modes.m_max", "must be >= 1"));
                }
                if let Some(f) = families.iter().find(|&&f| f > 1) {
                    return Err(Error::invalid("modes.families", format!("family {f} has no closed form")));
                }
                let mut out = Vec::new();
                for &f in families {
                    for m in 1..=*m_max {
                        let idx = if f == 0 { MsmIndex::mm(m) } else { MsmIndex::m1m(m) };
                        out.push(check("modes".into(), idx, *g, gamma.unwrap_or(mat.default_linewidth))?);
                    }
                }
                Ok(out)
            }
        }
    }
}

fn map_serde_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    let inner = e.into_inner();
    let msg = inner.to_string();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        let field = rest.split('`').next().unwrap_or(rest);
        let key = if path == "." || path.is_empty() {
            field.to_string()
        } else {
            // the path already ends with the offending field
            path
        };
        return Error::UnknownKey(key);
    }
    if path == "." || path.is_empty() {
        Error::ConfigParse(msg)
    } else {
        Error::ConfigParse(format!("{path}: {msg}"))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_json(&text)
}

pub fn save_config(cfg: &RunConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, cfg.to_json() + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUNDLED: &str = include_str!("../../../configs/te101_table1.json");

    #[test]
    fn empty_object_is_te101_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let s = cfg.resolve().unwrap();
        assert_eq!(s.preset, CavityPreset::Te101);
        assert_eq!(s.cavity.fc_ghz, 8.401);
        assert_eq!(s.modes.len(), 10);
        assert_eq!(s.fields.len(), 401);
        assert!((s.fields[400] - 0.33).abs() < 1e-12);
        assert_eq!(s.freqs.len(), 1601);
        assert_eq!(s.freqs[800], 8.401);
        assert!(s.noise.is_none());
    }

    #[test]
    fn bundled_scenario() {
        let cfg = RunConfig::from_json(BUNDLED).unwrap();
        let s = cfg.resolve().unwrap();
        assert!((s.cavity.kappa_mhz() - 3.2).abs() < 1e-12);
        assert_eq!(s.material.gamma_gyro, 28.76);
        assert_eq!(s.material.ms, 0.176);
        let from_table: Vec<ModeSpec> = presets::TABLE1
            .iter()
            .map(|r| ModeSpec::new(r.mode, r.g_mhz, r.gamma_mhz).unwrap())
            .collect();
        assert_eq!(s.modes, from_table);
    }

    #[test]
    fn round_trip() {
        for text in [BUNDLED, "{}", r#"{"modes": {"kind": "auto", "m_max": 4, "g": 3.0}, "noise": {"seed": 3, "level": 1e-5}}"#] {
            let a = RunConfig::from_json(text).unwrap();
            let b = RunConfig::from_json(&a.to_json()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn validation_names_the_key() {
        let key = |text: &str| match RunConfig::from_json(text) {
            Err(Error::Invalid { key, .. }) => key,
            other => panic!("{other:?}"),
        };
        assert_eq!(key(r#"{"material": {"Ms": 0}}"#), "material.Ms");
        assert_eq!(key(r#"{"material": {"Ms": -0.1}}"#), "material.Ms");
        assert_eq!(key(r#"{"cavity": {"preset": "TE999"}}"#), "cavity.preset");
        assert_eq!(key(r#"{"sweep": {"field_step": 0}}"#), "sweep.field_step");
        assert_eq!(key(r#"{"detector": {"tolerance": 0.7}}"#), "detector.tolerance");
        assert_eq!(
            key(r#"{"modes": {"kind": "list", "entries": [{"n": 3, "m": 1, "g": 1}]}}"#),
            "modes.entries[0]"
        );
    }

    #[test]
    fn unknown_keys_and_parse_errors() {
        assert!(matches!(RunConfig::from_json(r#"{"colour": 1}"#), Err(Error::UnknownKey(k)) if k == "colour"));
        assert!(matches!(
            RunConfig::from_json(r#"{"material": {"Mss": 1}}"#),
            Err(Error::UnknownKey(k)) if k == "material.Mss"
        ));
        assert!(matches!(RunConfig::from_json("{"), Err(Error::ConfigParse(_))));
        assert!(matches!(RunConfig::from_json(r#"{"material": {"Ms": "x"}}"#), Err(Error::ConfigParse(_))));
    }

    #[test]
    fn te102_preset() {
        let s = RunConfig::from_json(r#"{"cavity": {"preset": "TE102"}, "modes": {"kind": "auto", "m_max": 3, "families": [0], "g": 5}}"#)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(s.cavity.fc_ghz, 10.361);
        assert!((s.fields[0] - 0.36).abs() < 1e-12);
        assert_eq!(s.modes.len(), 3);
        assert_eq!(s.modes[0].gamma_mhz, presets::FMR_LINEWIDTH_MHZ);
    }
}
