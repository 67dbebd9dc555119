//! Mode identification through the rescaled field coordinate.
//!
//! With `u = 1/(H − (f/Γ − Ms/6))` the closed-form resonance fields map onto
//! integers: `−1/2 + (Ms/4)·u = m` for (m, m) and `−3/2 + (3Ms/4)·u = m` for
//! (m+1, m). The second coordinate is exactly three times the first, so
//! every (m, m) field is also the (3m+1, 3m) field.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dispersion::closed_form_coefficient;
use crate::error::{Error, Result};
use crate::params::{positive, MaterialParams, MsmIndex};
use crate::presets::YIG_MS_LITERATURE_T;
use crate::transmission::SpectralMap;

pub const DEFAULT_TOLERANCE: f64 = 0.3;
pub const MAX_BOOTSTRAP_ITERATIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// (m, m), n − |m| = 0.
    Mm,
    /// (m+1, m), n − |m| = 1.
    M1m,
}

impl Family {
    pub const ALL: [Family; 2] = [Family::Mm, Family::M1m];

    pub fn index(self, m: u32) -> MsmIndex {
        match self {
            Family::Mm => MsmIndex::mm(m),
            Family::M1m => MsmIndex::m1m(m),
        }
    }

    pub fn of(index: MsmIndex) -> Option<Family> {
        match index.family() {
            0 => Some(Family::Mm),
            1 => Some(Family::M1m),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Mm => "mm",
            Family::M1m => "m1m",
        }
    }

    /// (offset, scale) of `coordinate = offset + scale·Ms·u`.
    fn affine(self) -> (f64, f64) {
        match self {
            Family::Mm => (-0.5, 0.25),
            Family::M1m => (-1.5, 0.75),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mm" => Ok(Family::Mm),
            "m1m" => Ok(Family::M1m),
            other => Err(Error::invalid("family", format!("expected mm or m1m, got {other:?}"))),
        }
    }
}

/// Parameters of the rescaling: probe frequency, Γ and Ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentParams {
    pub fc_ghz: f64,
    pub gamma_gyro: f64,
    pub ms: f64,
}

impl IdentParams {
    pub fn new(fc_ghz: f64, gamma_gyro: f64, ms: f64) -> Result<Self> {
        positive("identify.fc", fc_ghz)?;
        positive("material.gamma_gyro", gamma_gyro)?;
        positive("material.Ms", ms)?;
        Ok(Self {
            fc_ghz,
            gamma_gyro,
            ms,
        })
    }

    pub fn from_material(fc_ghz: f64, mat: &MaterialParams) -> Result<Self> {
        Self::new(fc_ghz, mat.gamma_gyro, mat.ms)
    }

    pub fn accumulation_field(&self) -> f64 {
        self.fc_ghz / self.gamma_gyro - self.ms / 6.0
    }
}

/// u = 1/(H − (fc/Γ − Ms/6)), 1/T.
pub fn rescale_u(h: f64, params: &IdentParams) -> Result<f64> {
    let pole = params.accumulation_field();
    // h − f/Γ is exact near resonance, so only the final sum rounds
    let d = (h - params.fc_ghz / params.gamma_gyro) + params.ms / 6.0;
    // closer than the resolution of H itself counts as on the pole
    if d.abs() <= 2.0 * f64::EPSILON * h.abs() || !(1.0 / d).is_finite() {
        return Err(Error::Singular { field: h, pole });
    }
    Ok(1.0 / d)
}

pub fn index_coordinate(h: f64, params: &IdentParams, family: Family) -> Result<f64> {
    let (offset, scale) = family.affine();
    Ok(offset + scale * params.ms * rescale_u(h, params)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAssignment {
    pub field_t: f64,
    pub family: Family,
    pub m: u32,
    pub coordinate: f64,
    /// |coordinate − m|, never above the assignment tolerance.
    pub residual: f64,
}

impl ModeAssignment {
    pub fn index(&self) -> MsmIndex {
        self.family.index(self.m)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssignmentOutcome {
    /// In input order.
    pub assigned: Vec<ModeAssignment>,
    /// Fields with no family coordinate within tolerance of an integer >= 1.
    pub unassigned: Vec<f64>,
}

/// Nearest-integer assignment over both families. Equal residuals resolve
/// to (m, m).
pub fn assign_modes(fields: &[f64], params: &IdentParams, tolerance: f64) -> Result<AssignmentOutcome> {
    if !(tolerance > 0.0 && tolerance < 0.5) {
        return Err(Error::invalid(
            "identify.tolerance",
            format!("must be in (0, 0.5), got {tolerance}"),
        ));
    }
    let mut out = AssignmentOutcome::default();
    for &h in fields {
        match assign_one(h, params, tolerance) {
            Some(a) => out.assigned.push(a),
            None => out.unassigned.push(h),
        }
    }
    Ok(out)
}

fn assign_one(h: f64, params: &IdentParams, tolerance: f64) -> Option<ModeAssignment> {
    let mut best: Option<ModeAssignment> = None;
    for family in Family::ALL {
        let Ok(coordinate) = index_coordinate(h, params, family) else {
            continue;
        };
        let k = coordinate.round();
        let residual = (coordinate - k).abs();
        if !(k >= 1.0 && residual <= tolerance && k < u32::MAX as f64) {
            continue;
        }
        let candidate = ModeAssignment {
            field_t: h,
            family,
            m: k as u32,
            coordinate,
            residual,
        };
        // Family::ALL lists mm first, so a strict comparison keeps mm on ties.
        if best.is_none_or(|b| residual < b.residual) {
            best = Some(candidate);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub gamma_gyro: f64,
    pub ms: f64,
    /// RMS of the field residuals, T.
    pub rms_residual: f64,
    /// H_obs − H_model per point, T.
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn params(&self, fc_ghz: f64) -> IdentParams {
        IdentParams {
            fc_ghz,
            gamma_gyro: self.gamma_gyro,
            ms: self.ms,
        }
    }
}

/// Least squares of `H = fc·(1/Γ) + Ms·c(n, m)` over assigned closed-form
/// modes; linear in (1/Γ, Ms).
pub fn fit_material_params(points: &[(MsmIndex, f64)], fc_ghz: f64) -> Result<FitResult> {
    positive("identify.fc", fc_ghz)?;
    let mut distinct: Vec<MsmIndex> = points.iter().map(|p| p.0).collect();
    distinct.sort();
    distinct.dedup();
    if points.len() < 2 || distinct.len() < 2 {
        return Err(Error::RankDeficient(format!(
            "{} points over {} distinct modes; need >= 2 of each",
            points.len(),
            distinct.len()
        )));
    }
    let coeffs: Vec<f64> = points
        .iter()
        .map(|(idx, _)| closed_form_coefficient(*idx))
        .collect::<Result<_>>()?;
    let a = DMatrix::from_fn(points.len(), 2, |r, c| if c == 0 { fc_ghz } else { coeffs[r] });
    let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let svd = a.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient(format!(
            "design matrix singular values {smax:e}, {smin:e}"
        )));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let (inv_gamma, ms) = (x[0], x[1]);
    if !(inv_gamma > 0.0 && ms > 0.0) {
        return Err(Error::Domain(format!(
            "fit gave non-physical 1/Γ = {inv_gamma}, Ms = {ms}"
        )));
    }
    let residuals: Vec<f64> = (&b - &a * &x).iter().copied().collect();
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(FitResult {
        gamma_gyro: 1.0 / inv_gamma,
        ms,
        rms_residual,
        residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifyOptions {
    pub tolerance: f64,
    /// Ms for the first assignment pass, T.
    pub ms_initial: f64,
    pub max_iterations: usize,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            ms_initial: YIG_MS_LITERATURE_T,
            max_iterations: MAX_BOOTSTRAP_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub assignments: AssignmentOutcome,
    pub fit: FitResult,
    /// Parameters the final assignments were made with.
    pub params: IdentParams,
    pub iterations: usize,
    /// Assignments stopped changing before the iteration cap.
    pub converged: bool,
}

/// Assign with Γ0 = fc/H_max and the initial Ms, fit, re-assign with the
/// fit, until the assignment set is stable.
pub fn identify(fields: &[f64], fc_ghz: f64, opts: &IdentifyOptions) -> Result<Identification> {
    let h_max = fields.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(h_max > 0.0) {
        return Err(Error::RankDeficient("no anticrossing fields".into()));
    }
    let start = IdentParams::new(fc_ghz, fc_ghz / h_max, opts.ms_initial)?;
    let mut assignments = assign_modes(fields, &start, opts.tolerance)?;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let fit = fit_assignments(&assignments, fc_ghz)?;
        let params = fit.params(fc_ghz);
        let next = assign_modes(fields, &params, opts.tolerance)?;
        let converged = same_labels(&next, &assignments);
        if converged || iterations >= opts.max_iterations {
            let fit = if converged { fit } else { fit_assignments(&next, fc_ghz)? };
            return Ok(Identification {
                assignments: next,
                fit,
                params,
                iterations,
                converged,
            });
        }
        assignments = next;
    }
}

fn fit_assignments(a: &AssignmentOutcome, fc_ghz: f64) -> Result<FitResult> {
    let points: Vec<(MsmIndex, f64)> = a.assigned.iter().map(|x| (x.index(), x.field_t)).collect();
    fit_material_params(&points, fc_ghz)
}

fn same_labels(a: &AssignmentOutcome, b: &AssignmentOutcome) -> bool {
    a.assigned.len() == b.assigned.len()
        && a.unassigned == b.unassigned
        && a
            .assigned
            .iter()
            .zip(&b.assigned)
            .all(|(x, y)| x.field_t == y.field_t && x.index() == y.index())
}

/// Index coordinates of `fields` and the permutation that sorts them
/// ascending. Errors if the fields straddle or touch the accumulation point.
pub fn rescale_axis(fields: &[f64], params: &IdentParams, family: Family) -> Result<(Vec<f64>, Vec<usize>)> {
    let pole = params.accumulation_field();
    let above = fields.iter().filter(|&&h| h > pole).count();
    if above != 0 && above != fields.len() {
        let nearest = fields
            .iter()
            .copied()
            .min_by(|a, b| (a - pole).abs().total_cmp(&(b - pole).abs()))
            .unwrap_or(pole);
        return Err(Error::Singular { field: nearest, pole });
    }
    let coords: Vec<f64> = fields
        .iter()
        .map(|&h| index_coordinate(h, params, family))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
    let sorted = order.iter().map(|&i| coords[i]).collect();
    Ok((sorted, order))
}

/// Rows strictly above the accumulation point, where the coordinate is
/// positive and monotone.
pub fn crop_above_accumulation(map: &SpectralMap, params: &IdentParams) -> Result<SpectralMap> {
    let pole = params.accumulation_field();
    let start = map.field_axis().partition_point(|&h| h <= pole);
    let fields = map.field_axis()[start..].to_vec();
    if fields.is_empty() {
        return Err(Error::Singular {
            field: *map.field_axis().last().unwrap_or(&pole),
            pole,
        });
    }
    let amps = (start..map.field_axis().len())
        .flat_map(|i| map.row(i).iter().copied())
        .collect();
    SpectralMap::new(fields, map.freq_axis().to_vec(), amps)
}

/// The same rows re-indexed on the ascending index coordinate. The axis is
/// non-uniform; see [`resample_uniform`].
pub fn build_rescaled_map(map: &SpectralMap, params: &IdentParams, family: Family) -> Result<SpectralMap> {
    let (coords, order) = rescale_axis(map.field_axis(), params, family)?;
    let amps = order.iter().flat_map(|&i| map.row(i).iter().copied()).collect();
    SpectralMap::new(coords, map.freq_axis().to_vec(), amps)
}

/// Uniform first axis on `[lo, hi]` with `n` rows, each copied from the
/// nearest source row.
pub fn resample_uniform(map: &SpectralMap, lo: f64, hi: f64, n: usize) -> Result<SpectralMap> {
    if n < 2 || !(hi > lo) {
        return Err(Error::invalid("rescale.range", format!("need hi > lo and n >= 2, got [{lo}, {hi}] n={n}")));
    }
    let src = map.field_axis();
    let axis: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let amps = axis
        .iter()
        .flat_map(|&x| map.row(nearest_row(src, x)).iter().copied())
        .collect();
    SpectralMap::new(axis, map.freq_axis().to_vec(), amps)
}

pub(crate) fn nearest_row(sorted: &[f64], x: f64) -> usize {
    let i = sorted.partition_point(|&v| v < x);
    if i == 0 {
        0
    } else if i == sorted.len() {
        sorted.len() - 1
    } else if x - sorted[i - 1] <= sorted[i] - x {
        i - 1
    } else {
        i
    }
}
