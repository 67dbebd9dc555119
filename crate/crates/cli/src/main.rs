//! `magcav`: spectral and time-domain simulation of magnon-cavity coupling,
//! plus mode identification on measured or simulated maps.

mod log;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magcav_core::config::{load_config, RunConfig, Scenario};
use magcav_core::dispersion::{mode_field, msm_table};
use magcav_core::io::{
    assignments_csv, fit_json, load_assignments_csv, load_map_csv, msm_table_csv, raster_csv, render_heatmap,
    trace_csv, write_map_csv, write_text, FitJson, Palette, Raster,
};
use magcav_core::modeid::{
    build_rescaled_map, crop_above_accumulation, fit_material_params, identify, resample_uniform, Family,
    IdentParams,
};
use magcav_core::timedomain::{rabi_period, simulate_pulse, time_field_map};
use magcav_core::transmission::{build_map_with_noise, find_anticrossings, modes_at_field};
use magcav_core::{Error, Result};
use serde_json::json;

use crate::log::Log;

#[derive(Debug, Parser)]
#[command(name = "magcav", version, about = "Magnon-cavity coupling simulator and mode identifier")]
struct Cli {
    /// Override the noise seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    /// Emit progress and errors as JSON lines on stderr.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transmission map |S21|(H, f) as long-format CSV.
    SimulateMap(SimulateMap),
    /// Cavity envelope after a square drive pulse.
    SimulatePulse(SimulatePulse),
    /// Closed-form magnetostatic mode fields at one frequency.
    MsmTable(MsmTable),
    /// Detect anticrossings in a map and assign mode indices.
    Identify(Identify),
    /// Fit Γ and Ms to an assignments CSV.
    FitParams(FitParams),
    /// Re-index a map on the mode-index coordinate.
    Rescale(Rescale),
    /// Render a map CSV to a P6 pixmap.
    Render(Render),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateMap {
    #[command(flatten)]
    cfg: ConfigArg,
    /// Output map CSV [default: output.map].
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also render the map to this pixmap.
    #[arg(long)]
    image: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulatePulse {
    #[command(flatten)]
    cfg: ConfigArg,
    /// Bias field of the single trace, T [default: first mode on resonance with the drive].
    #[arg(long)]
    field: Option<f64>,
    /// Output trace CSV [default: output.trace].
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also simulate every sweep field and write the raster CSV here.
    #[arg(long)]
    raster: Option<PathBuf>,
    /// Render the raster to this pixmap (requires --raster).
    #[arg(long, requires = "raster")]
    image: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MsmTable {
    #[command(flatten)]
    cfg: ConfigArg,
    /// Probe frequency, GHz.
    #[arg(long = "f")]
    freq: f64,
    /// Highest m.
    #[arg(long, default_value_t = 9)]
    mmax: u32,
    /// Families: 0 for (m, m), 1 for (m+1, m).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    families: Vec<u32>,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Identify {
    #[command(flatten)]
    cfg: ConfigArg,
    /// Map CSV to analyse.
    #[arg(short, long)]
    input: PathBuf,
    /// Frequency of the detection trace, GHz [default: detector.trace_freq].
    #[arg(long)]
    trace_freq: Option<f64>,
    /// Assignments CSV [default: output.assignments].
    #[arg(long)]
    assignments: Option<PathBuf>,
    /// Fit JSON [default: output.fit].
    #[arg(long)]
    fit: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitParams {
    #[command(flatten)]
    cfg: ConfigArg,
    /// Assignments CSV.
    #[arg(short, long)]
    input: PathBuf,
    /// Frequency the fields were measured at, GHz [default: detector.trace_freq].
    #[arg(long)]
    fc: Option<f64>,
    /// Fit JSON [default: output.fit].
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Rescale {
    #[command(flatten)]
    cfg: ConfigArg,
    /// Map CSV to rescale.
    #[arg(short, long)]
    input: PathBuf,
    /// Rescaled map CSV; the first column holds the index coordinate.
    #[arg(short, long)]
    output: PathBuf,
    /// Take Γ and Ms from a fit JSON instead of the configured material.
    #[arg(long)]
    fit: Option<PathBuf>,
    /// Frequency the parameters refer to, GHz [default: detector.trace_freq].
    #[arg(long)]
    fc: Option<f64>,
    /// `mm` or `m1m` [default: detector.family].
    #[arg(long)]
    family: Option<Family>,
    /// Resample onto this many uniform rows.
    #[arg(long)]
    uniform: Option<usize>,
    /// Coordinate interval of the uniform resample [default: the full rescaled axis].
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], requires = "uniform")]
    range: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct Render {
    /// Map CSV.
    #[arg(short, long)]
    input: PathBuf,
    /// Output pixmap; a `.txt` sidecar is written next to it.
    #[arg(short, long)]
    output: PathBuf,
    /// `gray` or `viridis`.
    #[arg(long, default_value = "viridis")]
    palette: String,
    /// Name of the horizontal axis in the sidecar.
    #[arg(long, default_value = "H_T")]
    x_name: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = Log::new(cli.quiet, cli.json);
    match run(&cli, &log) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.is_validation() { 3 } else { 4 };
            log.error(&e, code);
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli, log: &Log) -> Result<()> {
    match &cli.command {
        Command::SimulateMap(a) => simulate_map(a, cli.seed, log),
        Command::SimulatePulse(a) => simulate_pulse_cmd(a, log),
        Command::MsmTable(a) => msm_table_cmd(a, log),
        Command::Identify(a) => identify_cmd(a, log),
        Command::FitParams(a) => fit_params_cmd(a, log),
        Command::Rescale(a) => rescale_cmd(a, log),
        Command::Render(a) => render_cmd(a, log),
    }
}

struct Loaded {
    cfg: RunConfig,
    scenario: Scenario,
}

fn load(arg: &ConfigArg) -> Result<Loaded> {
    let cfg = match &arg.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let scenario = cfg.resolve()?;
    Ok(Loaded { cfg, scenario })
}

fn out_path(explicit: &Option<PathBuf>, configured: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| PathBuf::from(configured))
}

fn palette(cfg: &RunConfig) -> Result<Palette> {
    Palette::parse(&cfg.output.palette)
}

fn shown(p: &Path) -> String {
    p.display().to_string()
}

fn simulate_map(a: &SimulateMap, seed: Option<u64>, log: &Log) -> Result<()> {
    let Loaded { cfg, scenario: s } = load(&a.cfg)?;
    let noise = s.noise.map(|mut n| {
        if let Some(seed) = seed {
            n.seed = seed;
        }
        n
    });
    let map = build_map_with_noise(&s.cavity, &s.material, &s.modes, &s.fields, &s.freqs, noise)?;
    let path = out_path(&a.output, &cfg.output.map);
    write_map_csv(&map, &path)?;
    log.info(
        "map",
        json!({"path": shown(&path), "fields": s.fields.len(), "freqs": s.freqs.len(), "noise": noise.is_some()}),
    );
    if let Some(img) = &a.image {
        render_heatmap(&Raster::spectral(&map, "H_T"), palette(&cfg)?, img)?;
        log.info("image", json!({"path": shown(img)}));
    }
    Ok(())
}

fn simulate_pulse_cmd(a: &SimulatePulse, log: &Log) -> Result<()> {
    let Loaded { cfg, scenario: s } = load(&a.cfg)?;
    let field = match a.field {
        Some(h) => h,
        None => {
            let first = s.modes.first().ok_or_else(|| Error::Invalid {
                key: "modes".into(),
                reason: "empty mode set".into(),
            })?;
            mode_field(first.index, s.pulse.drive_freq_ghz, &s.material)?
        }
    };
    let trace = simulate_pulse(&s.cavity, &modes_at_field(&s.modes, field, &s.material)?, &s.pulse)?;
    let path = out_path(&a.output, &cfg.output.trace);
    write_text(&path, &trace_csv(&trace))?;
    let rabi = rabi_period(&trace).ok();
    log.info(
        "trace",
        json!({
            "path": shown(&path),
            "field_T": field,
            "samples": trace.t_us.len(),
            "rabi_period_ns": rabi.map(|r| r.period_ns),
        }),
    );
    if let Some(raster) = &a.raster {
        let map = time_field_map(&s.cavity, &s.material, &s.modes, &s.fields, &s.pulse, s.time_stride)?;
        write_text(raster, &raster_csv(&map))?;
        log.info(
            "raster",
            json!({"path": shown(raster), "fields": map.field_axis().len(), "times": map.time_axis().len()}),
        );
        if let Some(img) = &a.image {
            render_heatmap(&Raster::time(&map, "H_T"), palette(&cfg)?, img)?;
            log.info("image", json!({"path": shown(img)}));
        }
    }
    Ok(())
}

fn msm_table_cmd(a: &MsmTable, log: &Log) -> Result<()> {
    let Loaded { scenario: s, .. } = load(&a.cfg)?;
    let rows = msm_table(a.freq, &s.material, a.mmax, &a.families)?;
    let csv = msm_table_csv(&rows);
    match &a.output {
        Some(p) => {
            write_text(p, &csv)?;
            log.info("msm-table", json!({"path": shown(p), "rows": rows.len()}));
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn identify_cmd(a: &Identify, log: &Log) -> Result<()> {
    let Loaded { cfg, scenario: s } = load(&a.cfg)?;
    let map = load_map_csv(&a.input)?;
    let trace = map.trace_at(a.trace_freq.unwrap_or(s.trace_freq))?;
    let dips = find_anticrossings(&trace, s.dip_prominence_db);
    let id = identify(&dips, trace.freq_ghz, &s.identify)?;
    let assignments = out_path(&a.assignments, &cfg.output.assignments);
    let fit = out_path(&a.fit, &cfg.output.fit);
    write_text(&assignments, &assignments_csv(&id.assignments.assigned))?;
    write_text(&fit, &fit_json(&id.fit))?;
    let labels: Vec<String> = id.assignments.assigned.iter().map(|m| m.index().to_string()).collect();
    log.info(
        "identify",
        json!({
            "trace_freq_GHz": trace.freq_ghz,
            "dips": dips.len(),
            "assigned": labels,
            "unassigned": id.assignments.unassigned,
            "gamma_gyro_GHzperT": id.fit.gamma_gyro,
            "Ms_T": id.fit.ms,
            "iterations": id.iterations,
            "converged": id.converged,
            "assignments": shown(&assignments),
            "fit": shown(&fit),
        }),
    );
    Ok(())
}

fn fit_params_cmd(a: &FitParams, log: &Log) -> Result<()> {
    let Loaded { cfg, scenario: s } = load(&a.cfg)?;
    let points = load_assignments_csv(&a.input)?;
    let fit = fit_material_params(&points, a.fc.unwrap_or(s.trace_freq))?;
    let path = out_path(&a.output, &cfg.output.fit);
    write_text(&path, &fit_json(&fit))?;
    log.info(
        "fit",
        json!({"path": shown(&path), "points": points.len(), "gamma_gyro_GHzperT": fit.gamma_gyro, "Ms_T": fit.ms}),
    );
    Ok(())
}

fn read_fit(path: &Path) -> Result<FitJson> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: shown(path),
        line: e.line() as u64,
        reason: e.to_string(),
    })
}

fn rescale_cmd(a: &Rescale, log: &Log) -> Result<()> {
    let Loaded { scenario: s, .. } = load(&a.cfg)?;
    let fc = a.fc.unwrap_or(s.trace_freq);
    let params = match &a.fit {
        Some(p) => {
            let f = read_fit(p)?;
            IdentParams::new(fc, f.gamma_gyro, f.ms)?
        }
        None => IdentParams::from_material(fc, &s.material)?,
    };
    let family = a.family.unwrap_or(s.family);
    let map = load_map_csv(&a.input)?;
    let mut out = build_rescaled_map(&crop_above_accumulation(&map, &params)?, &params, family)?;
    if let Some(n) = a.uniform {
        let axis = out.field_axis();
        let (lo, hi) = match a.range.as_deref() {
            Some([lo, hi]) => (*lo, *hi),
            _ => (axis[0], axis[axis.len() - 1]),
        };
        out = resample_uniform(&out, lo, hi, n)?;
    }
    write_map_csv(&out, &a.output)?;
    let axis = out.field_axis();
    log.info(
        "rescale",
        json!({
            "path": shown(&a.output),
            "family": family.name(),
            "rows": axis.len(),
            "coordinate_min": axis[0],
            "coordinate_max": axis[axis.len() - 1],
        }),
    );
    Ok(())
}

fn render_cmd(a: &Render, log: &Log) -> Result<()> {
    let map = load_map_csv(&a.input)?;
    let palette = Palette::parse(&a.palette)?;
    render_heatmap(&Raster::spectral(&map, &a.x_name), palette, &a.output)?;
    log.info("image", json!({"path": shown(&a.output), "palette": palette.name()}));
    Ok(())
}
