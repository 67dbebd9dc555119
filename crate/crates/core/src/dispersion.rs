//! Magnetostatic (Walker) modes of a saturated sphere.
//!
//! The (m, m) and (m+1, m) families have closed-form resonance conditions;
//! every other (n, m) needs the full characteristic equation
//!
//! ```text
//! n + 1 + ξ0 P'/P ± m ν = 0,   ξ0² = 1 + Hi/Ms − f²/(Γ² Ms Hi),
//! ν = Γ f Ms / (Γ² Hi² − f²),  P = P_n^{|m|}(ξ0),  P' = dP/dξ0.
//! ```
//!
//! With κ = Γ²Hi·Ms/(Γ²Hi² − f²) one has ξ0² = 1 + 1/κ. Writing
//! P_n^m = P_m^m·q, the term ξ0 P'/P becomes |m|(κ + 1) + ξ0 q'/q, and with
//! q of definite parity the whole residual is a real function of ξ0². The
//! solver uses that form, so it also finds modes whose ξ0 is imaginary
//! (f above Γ√(Hi(Hi+Ms))), which includes every (m, m) mode with m ≳ 3.

use crate::error::{Error, Result};
use crate::legendre::{legendre_pnm, ReducedLegendre};
use crate::params::{internal_field, MaterialParams, MsmIndex};

/// Degeneracy threshold for [`msm_table`], T.
pub const DEGENERACY_TOLERANCE_T: f64 = 0.1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerBand {
    /// Γ·Hi, GHz. ξ0 = 1 here.
    pub f_low: f64,
    /// Γ·√(Hi(Hi + Ms)), GHz. ξ0 = 0 here.
    pub f_high: f64,
    /// Γ·(Hi + Ms/2), GHz: the accumulation frequency of the surface-like
    /// families and the upper end of the root search.
    pub f_surface: f64,
}

impl WalkerBand {
    /// Whether ξ0 is real and inside (0, 1) at `f`.
    pub fn contains(&self, f: f64) -> bool {
        f > self.f_low && f < self.f_high
    }
}

/// Which sign of the ±mν term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignBranch {
    /// Reproduces the closed forms of the (m, m) and (m+1, m) families.
    #[default]
    Plus,
    Minus,
}

impl SignBranch {
    fn sign(self) -> f64 {
        match self {
            SignBranch::Plus => 1.0,
            SignBranch::Minus => -1.0,
        }
    }
}

/// H0 = f/Γ: the Kittel (uniform precession) resonance field.
pub fn kittel_field(f_ghz: f64, mat: &MaterialParams) -> f64 {
    f_ghz / mat.gamma_gyro
}

/// Field f/Γ − Ms/6 that both closed-form families approach as m → ∞.
pub fn accumulation_field(f_ghz: f64, mat: &MaterialParams) -> f64 {
    f_ghz / mat.gamma_gyro - mat.ms / 6.0
}

/// Resonance field of the (m, m) mode at frequency `f_ghz`:
/// H = f/Γ + Ms(1/3 − m/(2m+1)).
pub fn field_for_mode_mm(m: u32, f_ghz: f64, mat: &MaterialParams) -> Result<f64> {
    check_order(m)?;
    let m = m as f64;
    Ok(f_ghz / mat.gamma_gyro + mat.ms * ((1.0 - m) / (3.0 * (2.0 * m + 1.0))))
}

/// Resonance field of the (m+1, m) mode: H = f/Γ + Ms(1/3 − m/(2m+3)).
pub fn field_for_mode_m1m(m: u32, f_ghz: f64, mat: &MaterialParams) -> Result<f64> {
    check_order(m)?;
    let m = m as f64;
    Ok(f_ghz / mat.gamma_gyro + mat.ms * ((3.0 - m) / (3.0 * (2.0 * m + 3.0))))
}

fn check_order(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("mode.m", "closed forms need m >= 1"));
    }
    Ok(())
}

/// Ms coefficient c_m of the closed forms H = f/Γ + Ms·c_m.
pub(crate) fn closed_form_coefficient(index: MsmIndex) -> Result<f64> {
    let m = closed_form_order(index)? as f64;
    // 1/3 − m/(2m+1) and 1/3 − m/(2m+3) over a common denominator
    Ok(match index.family() {
        0 => (1.0 - m) / (3.0 * (2.0 * m + 1.0)),
        _ => (3.0 - m) / (3.0 * (2.0 * m + 3.0)),
    })
}

fn closed_form_order(index: MsmIndex) -> Result<u32> {
    if index.m <= 0 || index.family() > 1 {
        return Err(Error::invalid(
            "mode",
            format!("{index} has no closed form (need m >= 1 and n - |m| in {{0, 1}})"),
        ));
    }
    Ok(index.m as u32)
}

/// Resonance field of a closed-form mode at frequency `f_ghz`.
pub fn mode_field(index: MsmIndex, f_ghz: f64, mat: &MaterialParams) -> Result<f64> {
    Ok(f_ghz / mat.gamma_gyro + mat.ms * closed_form_coefficient(index)?)
}

/// Resonance frequency (GHz) of a closed-form mode at bias field `h0`.
pub fn mode_frequency(index: MsmIndex, h0: f64, mat: &MaterialParams) -> Result<f64> {
    internal_field(h0, mat)?;
    Ok(mat.gamma_gyro * (h0 - mat.ms * closed_form_coefficient(index)?))
}

pub fn walker_band(h0: f64, mat: &MaterialParams) -> Result<WalkerBand> {
    let hi = internal_field(h0, mat)?;
    let g = mat.gamma_gyro;
    Ok(WalkerBand {
        f_low: g * hi,
        f_high: g * (hi * (hi + mat.ms)).sqrt(),
        f_surface: g * (hi + 0.5 * mat.ms),
    })
}

/// ξ0² at (f, H0); any real value, negative above the Walker band.
pub fn xi0_squared(f_ghz: f64, h0: f64, mat: &MaterialParams) -> Result<f64> {
    let hi = internal_field(h0, mat)?;
    let g = mat.gamma_gyro;
    Ok(1.0 + hi / mat.ms - f_ghz * f_ghz / (g * g * mat.ms * hi))
}

/// Real ξ0 in [0, 1]; out-of-band error otherwise.
pub fn xi0(f_ghz: f64, h0: f64, mat: &MaterialParams) -> Result<f64> {
    let s = xi0_squared(f_ghz, h0, mat)?;
    // Allow rounding at the band edges.
    let eps = 1e-12;
    if s < -eps || s > 1.0 + eps {
        let band = walker_band(h0, mat)?;
        return Err(Error::OutOfBand {
            f: f_ghz,
            low: band.f_low,
            high: band.f_high,
        });
    }
    Ok(s.clamp(0.0, 1.0).sqrt())
}

/// κ and ν of the susceptibility tensor (dimensionless).
fn kappa_nu(f_ghz: f64, h0: f64, mat: &MaterialParams) -> Result<(f64, f64)> {
    let hi = internal_field(h0, mat)?;
    let fi = mat.gamma_gyro * hi;
    let fm = mat.gamma_gyro * mat.ms;
    let den = fi * fi - f_ghz * f_ghz;
    Ok((fi * fm / den, f_ghz * fm / den))
}

fn check_solvable(index: MsmIndex) -> Result<()> {
    if index.n == 0 {
        return Err(Error::invalid("mode.n", "characteristic equation needs n >= 1"));
    }
    if index.m.unsigned_abs() > index.n {
        return Err(Error::invalid("mode", format!("|m| exceeds n in {index}")));
    }
    Ok(())
}

/// Characteristic residual in the printed ratio form. Only defined where
/// ξ0 is real.
pub fn characteristic_residual(
    index: MsmIndex,
    f_ghz: f64,
    h0: f64,
    mat: &MaterialParams,
    branch: SignBranch,
) -> Result<f64> {
    check_solvable(index)?;
    let x = xi0(f_ghz, h0, mat)?;
    let (p, dp) = legendre_pnm(index.n, index.m.unsigned_abs(), x)?;
    let (_, nu) = kappa_nu(f_ghz, h0, mat)?;
    Ok(index.n as f64 + 1.0 + x * dp / p + branch.sign() * index.m as f64 * nu)
}

/// Pole-free residual: the ratio form multiplied by q/ξ0^p. Real for any ξ0².
fn scaled_residual(
    poly: &ReducedLegendre,
    index: MsmIndex,
    f_ghz: f64,
    h0: f64,
    mat: &MaterialParams,
    branch: SignBranch,
) -> Result<f64> {
    let (kappa, nu) = kappa_nu(f_ghz, h0, mat)?;
    let s = 1.0 + 1.0 / kappa;
    let (w, v) = poly.eval_in_square(s);
    let abs_m = index.m.unsigned_abs() as f64;
    let bracket =
        index.n as f64 + 1.0 + abs_m * (kappa + 1.0) + branch.sign() * index.m as f64 * nu;
    Ok(w * bracket + v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Uniform scan subintervals across the search band.
    pub subdivisions: usize,
    /// Bisection stops when the bracket is narrower than this, GHz.
    pub tolerance_ghz: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            subdivisions: 2000,
            tolerance_ghz: 1e-9,
            max_iterations: 200,
        }
    }
}

/// All roots (GHz, ascending) of the characteristic equation in
/// (Γ·Hi, Γ·(Hi + Ms/2)]. The lower edge carries the pole of ν and is
/// never sampled.
pub fn solve_characteristic(
    index: MsmIndex,
    h0: f64,
    mat: &MaterialParams,
    branch: SignBranch,
) -> Result<Vec<f64>> {
    solve_characteristic_with(index, h0, mat, branch, &SolverOptions::default())
}

pub fn solve_characteristic_with(
    index: MsmIndex,
    h0: f64,
    mat: &MaterialParams,
    branch: SignBranch,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    check_solvable(index)?;
    if opts.subdivisions == 0 {
        return Err(Error::invalid("solver.subdivisions", "must be >= 1"));
    }
    let band = walker_band(h0, mat)?;
    let poly = ReducedLegendre::new(index.n, index.m.unsigned_abs())?;
    let residual = |f: f64| scaled_residual(&poly, index, f, h0, mat, branch);

    let width = band.f_surface - band.f_low;
    let step = width / opts.subdivisions as f64;
    let mut roots = Vec::new();
    let mut lo = band.f_low + step;
    let mut r_lo = residual(lo)?;
    if r_lo == 0.0 {
        roots.push(lo);
    }
    for k in 2..=opts.subdivisions {
        let hi = if k == opts.subdivisions {
            band.f_surface
        } else {
            band.f_low + k as f64 * step
        };
        let r_hi = residual(hi)?;
        if r_hi == 0.0 {
            roots.push(hi);
        } else if r_lo != 0.0 && r_lo.signum() != r_hi.signum() {
            roots.push(bisect(&residual, lo, hi, r_lo, opts)?);
        }
        lo = hi;
        r_lo = r_hi;
    }
    Ok(roots)
}

fn bisect<F>(residual: &F, mut lo: f64, mut hi: f64, mut r_lo: f64, opts: &SolverOptions) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (lo0, hi0) = (lo, hi);
    for _ in 0..opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        if hi - lo < opts.tolerance_ghz {
            return Ok(mid);
        }
        let r_mid = residual(mid)?;
        if r_mid == 0.0 {
            return Ok(mid);
        }
        if r_mid.signum() == r_lo.signum() {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        lo: lo0,
        hi: hi0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsmResonance {
    pub index: MsmIndex,
    /// Bias field at which the mode is resonant with the probe frequency, T.
    pub field_at_cavity: f64,
    /// The probe frequency, GHz.
    pub frequency_at_field: f64,
    /// Other entries of the same table within [`DEGENERACY_TOLERANCE_T`].
    pub degenerate_with: Vec<MsmIndex>,
}

/// Closed-form resonance fields of the requested families (0 = (m, m),
/// 1 = (m+1, m)) for m = 1..=m_max, sorted by field.
pub fn msm_table(
    f_ghz: f64,
    mat: &MaterialParams,
    m_max: u32,
    families: &[u32],
) -> Result<Vec<MsmResonance>> {
    if m_max == 0 {
        return Err(Error::invalid("m_max", "must be >= 1"));
    }
    let mut out = Vec::new();
    for &family in families {
        for m in 1..=m_max {
            let index = match family {
                0 => MsmIndex::mm(m),
                1 => MsmIndex::m1m(m),
                other => {
                    return Err(Error::invalid(
                        "families",
                        format!("family {other} has no closed form"),
                    ))
                }
            };
            out.push(MsmResonance {
                index,
                field_at_cavity: mode_field(index, f_ghz, mat)?,
                frequency_at_field: f_ghz,
                degenerate_with: Vec::new(),
            });
        }
    }
    out.sort_by(|a, b| {
        a.field_at_cavity
            .total_cmp(&b.field_at_cavity)
            .then(a.index.family().cmp(&b.index.family()))
    });
    out.dedup_by_key(|r| r.index);
    let fields: Vec<(MsmIndex, f64)> = out.iter().map(|r| (r.index, r.field_at_cavity)).collect();
    for r in &mut out {
        r.degenerate_with = fields
            .iter()
            .filter(|(idx, h)| *idx != r.index && (h - r.field_at_cavity).abs() <= DEGENERACY_TOLERANCE_T)
            .map(|(idx, _)| *idx)
            .collect();
    }
    Ok(out)
}
