//! CSV, JSON and pixmap formats.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! emitter is locale-free and a written value parses back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coupling::{FieldSample, FieldSampleGrid};
use crate::dispersion::MsmResonance;
use crate::error::{Error, Result};
use crate::modeid::{Family, FitResult, ModeAssignment};
use crate::params::MsmIndex;
use crate::timedomain::{EnvelopeTrace, TimeFieldMap};
use crate::transmission::SpectralMap;

pub const MAP_HEADER: [&str; 3] = ["H_T", "f_GHz", "amp_dB"];
pub const MSM_HEADER: [&str; 5] = ["family", "n", "m", "H0_T", "f_GHz"];
pub const ASSIGNMENT_HEADER: [&str; 5] = ["H_T", "family", "m", "coordinate", "residual"];
pub const TRACE_HEADER: [&str; 2] = ["t_us", "env"];
pub const RASTER_HEADER: [&str; 3] = ["H_T", "t_us", "env"];
pub const GRID_HEADER: [&str; 10] = ["x_m", "y_m", "z_m", "dV_m3", "Hx", "Hy", "Hz", "Mx", "My", "Mz"];

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn header(cols: &[&str]) -> String {
    let mut s = cols.join(",");
    s.push('\n');
    s
}

/// Long format, field index outermost.
pub fn map_csv(map: &SpectralMap) -> String {
    let mut s = header(&MAP_HEADER);
    for (i, h) in map.field_axis().iter().enumerate() {
        for (f, a) in map.freq_axis().iter().zip(map.row(i)) {
            let _ = writeln!(s, "{h},{f},{a}");
        }
    }
    s
}

pub fn write_map_csv(map: &SpectralMap, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &map_csv(map))
}

struct Table {
    path: String,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table(path: &Path, expected: &[&str], required: usize) -> Result<Table> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&shown, &text, expected, required)
}

fn parse_table(path: &str, text: &str, expected: &[&str], required: usize) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: path.to_string(),
        line,
        reason,
    };
    let head = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let got: Vec<&str> = head.iter().collect();
    if got.len() < required || got[..required] != expected[..required] {
        return Err(parse_err(1, format!("expected header {}, got {}", expected.join(","), got.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if rec.len() < required {
            return Err(parse_err(line, format!("expected {required} columns, got {}", rec.len())));
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table {
        path: path.to_string(),
        rows,
    })
}

impl Table {
    fn num(&self, line: u64, row: &[String], col: usize, name: &str) -> Result<f64> {
        let v: f64 = row[col].parse().map_err(|_| Error::Parse {
            path: self.path.clone(),
            line,
            reason: format!("{name}: {:?} is not a number", row[col]),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: self.path.clone(),
                line,
                reason: format!("{name}: non-finite value"),
            });
        }
        Ok(v)
    }

    fn int<T: std::str::FromStr>(&self, line: u64, row: &[String], col: usize, name: &str) -> Result<T> {
        row[col].parse().map_err(|_| Error::Parse {
            path: self.path.clone(),
            line,
            reason: format!("{name}: {:?} is not an integer", row[col]),
        })
    }
}

fn unique_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Rebuilds axes from the unique sorted values; row order is irrelevant.
pub fn load_map_csv(path: impl AsRef<Path>) -> Result<SpectralMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_map_csv(&path.display().to_string(), &text)
}

pub fn parse_map_csv(name: &str, text: &str) -> Result<SpectralMap> {
    let t = parse_table(name, text, &MAP_HEADER, 3)?;
    let mut cells = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        cells.push((
            *line,
            t.num(*line, row, 0, "H_T")?,
            t.num(*line, row, 1, "f_GHz")?,
            t.num(*line, row, 2, "amp_dB")?,
        ));
    }
    if cells.is_empty() {
        return Err(Error::Parse {
            path: name.to_string(),
            line: 1,
            reason: "no data rows".into(),
        });
    }
    let fields = unique_sorted(cells.iter().map(|c| c.1).collect());
    let freqs = unique_sorted(cells.iter().map(|c| c.2).collect());
    let w = freqs.len();
    let mut amps: Vec<Option<f64>> = vec![None; fields.len() * w];
    for &(line, h, f, a) in &cells {
        let i = fields.binary_search_by(|v| v.total_cmp(&h)).expect("axis built from cells");
        let j = freqs.binary_search_by(|v| v.total_cmp(&f)).expect("axis built from cells");
        if amps[i * w + j].replace(a).is_some() {
            return Err(Error::Parse {
                path: name.to_string(),
                line,
                reason: format!("duplicate cell H = {h} T, f = {f} GHz"),
            });
        }
    }
    if let Some(k) = amps.iter().position(Option::is_none) {
        return Err(Error::RaggedGrid {
            field: fields[k / w],
            freq: freqs[k % w],
        });
    }
    SpectralMap::new(fields, freqs, amps.into_iter().map(|a| a.unwrap()).collect())
}

pub fn msm_table_csv(rows: &[MsmResonance]) -> String {
    let mut s = header(&MSM_HEADER);
    for r in rows {
        let family = Family::of(r.index).map_or_else(|| r.index.family().to_string(), |f| f.name().to_string());
        let _ = writeln!(s, "{family},{},{},{},{}", r.index.n, r.index.m, r.field_at_cavity, r.frequency_at_field);
    }
    s
}

pub fn assignments_csv(rows: &[ModeAssignment]) -> String {
    let mut s = header(&ASSIGNMENT_HEADER);
    for a in rows {
        let _ = writeln!(s, "{},{},{},{},{}", a.field_t, a.family, a.m, a.coordinate, a.residual);
    }
    s
}

/// (mode, field) pairs from an assignments CSV; `coordinate` and
/// `residual` columns are optional.
pub fn load_assignments_csv(path: impl AsRef<Path>) -> Result<Vec<(MsmIndex, f64)>> {
    let t = read_table(path.as_ref(), &ASSIGNMENT_HEADER, 3)?;
    t.rows
        .iter()
        .map(|(line, row)| {
            let h = t.num(*line, row, 0, "H_T")?;
            let family: Family = row[1].parse().map_err(|_| Error::Parse {
                path: t.path.clone(),
                line: *line,
                reason: format!("family: expected mm or m1m, got {:?}", row[1]),
            })?;
            let m: u32 = t.int(*line, row, 2, "m")?;
            Ok((family.index(m), h))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitJson {
    #[serde(rename = "gamma_gyro_GHzperT")]
    pub gamma_gyro: f64,
    #[serde(rename = "Ms_T")]
    pub ms: f64,
    #[serde(rename = "rms_residual_T")]
    pub rms_residual: f64,
}

pub fn fit_json(fit: &FitResult) -> String {
    let j = FitJson {
        gamma_gyro: fit.gamma_gyro,
        ms: fit.ms,
        rms_residual: fit.rms_residual,
    };
    serde_json::to_string_pretty(&j).expect("fit serializes") + "\n"
}

pub fn trace_csv(trace: &EnvelopeTrace) -> String {
    let mut s = header(&TRACE_HEADER);
    for (t, e) in trace.t_us.iter().zip(&trace.env) {
        let _ = writeln!(s, "{t},{e}");
    }
    s
}

pub fn raster_csv(map: &TimeFieldMap) -> String {
    let mut s = header(&RASTER_HEADER);
    for (i, h) in map.field_axis().iter().enumerate() {
        for (t, e) in map.time_axis().iter().zip(map.row(i)) {
            let _ = writeln!(s, "{h},{t},{e}");
        }
    }
    s
}

/// Field sampling of the sphere for the overlap coefficient.
pub fn load_field_grid_csv(path: impl AsRef<Path>) -> Result<FieldSampleGrid> {
    let t = read_table(path.as_ref(), &GRID_HEADER, 10)?;
    let mut pts = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let v: Vec<f64> = (0..10)
            .map(|c| t.num(*line, row, c, GRID_HEADER[c]))
            .collect::<Result<_>>()?;
        pts.push(FieldSample {
            position: [v[0], v[1], v[2]],
            weight: v[3],
            h: [v[4], v[5], v[6]],
            m: [v[7], v[8], v[9]],
        });
    }
    FieldSampleGrid::new(pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    Gray,
    Viridis,
}

impl Palette {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gray" | "grey" => Ok(Palette::Gray),
            "viridis" => Ok(Palette::Viridis),
            other => Err(Error::invalid("palette", format!("expected gray or viridis, got {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Palette::Gray => "gray",
            Palette::Viridis => "viridis",
        }
    }

    /// Color at `t` in [0, 1].
    pub fn color(self, t: f64) -> [u8; 3] {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        match self {
            Palette::Gray => {
                let v = (255.0 * t).round() as u8;
                [v, v, v]
            }
            Palette::Viridis => {
                let x = t * (VIRIDIS.len() - 1) as f64;
                let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
                let f = x - i as f64;
                let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
                [0, 1, 2].map(|c| (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8)
            }
        }
    }
}

const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

/// A grid to render: `values[i * ny + j]` sits at (x_i, y_j).
#[derive(Debug, Clone, Copy)]
pub struct Raster<'a> {
    pub x_name: &'a str,
    pub x_axis: &'a [f64],
    pub y_name: &'a str,
    pub y_axis: &'a [f64],
    pub value_name: &'a str,
    pub values: &'a [f64],
}

impl<'a> Raster<'a> {
    pub fn spectral(map: &'a SpectralMap, x_name: &'a str) -> Self {
        Raster {
            x_name,
            x_axis: map.field_axis(),
            y_name: "f_GHz",
            y_axis: map.freq_axis(),
            value_name: "amp_dB",
            values: map.amplitudes(),
        }
    }

    pub fn time(map: &'a TimeFieldMap, x_name: &'a str) -> Self {
        Raster {
            x_name,
            x_axis: map.field_axis(),
            y_name: "t_us",
            y_axis: map.time_axis(),
            value_name: "env",
            values: map.envelope(),
        }
    }
}

/// Binary P6 pixmap: one pixel per cell, x to the right, y increasing
/// upward, values mapped linearly between the grid min and max.
pub fn heatmap_ppm(r: &Raster<'_>, palette: Palette) -> Result<Vec<u8>> {
    let (nx, ny) = (r.x_axis.len(), r.y_axis.len());
    if nx == 0 || ny == 0 || r.values.len() != nx * ny {
        return Err(Error::invalid("render", "empty or inconsistent grid"));
    }
    let (lo, hi) = value_range(r.values);
    let span = hi - lo;
    let mut out = format!("P6\n{nx} {ny}\n255\n").into_bytes();
    out.reserve(3 * nx * ny);
    for row in (0..ny).rev() {
        for col in 0..nx {
            let v = r.values[col * ny + row];
            let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
            out.extend_from_slice(&palette.color(t));
        }
    }
    Ok(out)
}

fn value_range(v: &[f64]) -> (f64, f64) {
    v.iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Sidecar text describing the pixmap axes.
pub fn heatmap_metadata(r: &Raster<'_>, palette: Palette) -> String {
    let (lo, hi) = value_range(r.values);
    let first = |a: &[f64]| a[0];
    let last = |a: &[f64]| a[a.len() - 1];
    format!(
        "format=P6\nwidth={}\nheight={}\nx={} [{}, {}] left to right\ny={} [{}, {}] bottom to top\nvalue={} [{}, {}]\npalette={}\n",
        r.x_axis.len(),
        r.y_axis.len(),
        r.x_name,
        first(r.x_axis),
        last(r.x_axis),
        r.y_name,
        first(r.y_axis),
        last(r.y_axis),
        r.value_name,
        lo,
        hi,
        palette.name()
    )
}

/// Writes the pixmap and `<path>.txt` next to it.
pub fn render_heatmap(r: &Raster<'_>, palette: Palette, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = heatmap_ppm(r, palette)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let mut side = path.as_os_str().to_owned();
    side.push(".txt");
    write_text(Path::new(&side), &heatmap_metadata(r, palette))
}
