use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TABLE1_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/te101_table1.json");

fn magcav(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magcav"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(o));
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Small two-mode scenario that keeps debug-build runs fast.
fn small_config(dir: &Path, noise: f64) -> PathBuf {
    let cfg = format!(
        r#"{{
  "cavity": {{"preset": "TE101", "kappa_total": 3.2}},
  "modes": {{"kind": "list", "entries": [
    {{"n": 1, "m": 1, "g": 53.5}},
    {{"n": 2, "m": 2, "g": 25.1}}
  ]}},
  "sweep": {{"field_min": 0.27, "field_max": 0.3, "field_step": 0.001, "freq_span_mhz": 320, "freq_points": 161}},
  "pulse": {{"duration_us": 0.5, "record_us": 0.8, "sample_ps": 250, "time_stride": 4}},
  "noise": {{"seed": 7, "level": {noise}}}
}}"#
    );
    write(dir, "small.json", &cfg)
}

#[test]
fn map_then_identify_recovers_table_modes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_ok(&magcav(d, &["--quiet", "simulate-map", "-c", TABLE1_CONFIG, "-o", "map.csv"]));
    assert_ok(&magcav(d, &["--quiet", "identify", "-c", TABLE1_CONFIG, "-i", "map.csv"]));

    let text = std::fs::read_to_string(d.join("assignments.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("H_T,family,m,coordinate,residual"));
    let mut labels: Vec<(String, u32)> = lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[1].to_string(), c[2].parse().unwrap())
        })
        .collect();
    labels.sort();
    let mut want: Vec<(String, u32)> = (1..=9).map(|m| ("mm".to_string(), m)).collect();
    want.push(("m1m".to_string(), 4));
    want.sort();
    assert_eq!(labels, want);

    let fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("fit.json")).unwrap()).unwrap();
    let gamma = fit["gamma_gyro_GHzperT"].as_f64().unwrap();
    let ms = fit["Ms_T"].as_f64().unwrap();
    assert!((gamma - 28.76).abs() < 0.05, "Γ = {gamma}");
    assert!((ms - 0.176).abs() < 0.002, "Ms = {ms}");
    assert!(fit["rms_residual_T"].as_f64().unwrap() < 1e-4);

    // refit from the written assignments reproduces the same parameters
    assert_ok(&magcav(d, &["--quiet", "fit-params", "-i", "assignments.csv", "--fc", "8.401", "-o", "refit.json"]));
    let refit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("refit.json")).unwrap()).unwrap();
    assert_eq!(refit, fit);
}

#[test]
fn msm_table_has_nine_rows() {
    let dir = TempDir::new().unwrap();
    let o = magcav(dir.path(), &["msm-table", "--f", "8.405", "--mmax", "9"]);
    assert_ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "family,n,m,H0_T,f_GHz");
    assert_eq!(lines.len(), 10);
    assert!(lines[1..].iter().all(|l| l.starts_with("mm,")));
}

#[test]
fn msm_table_both_families_to_file() {
    let dir = TempDir::new().unwrap();
    let o = magcav(dir.path(), &["--quiet", "msm-table", "--f", "8.405", "--mmax", "3", "--families", "0,1", "-o", "t.csv"]);
    assert_ok(&o);
    assert!(o.stderr.is_empty());
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = magcav(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn validation_error_names_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"material": {"Ms": 0}}"#);
    let o = magcav(dir.path(), &["simulate-map", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=invalid exit=3 "), "{err}");
    assert!(err.contains("material.Ms"));
}

#[test]
fn unknown_key_error_in_json_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"sweep": {"field_stp": 0.001}}"#);
    let o = magcav(dir.path(), &["--json", "simulate-map", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["error"], "unknown-key");
    assert!(v["message"].as_str().unwrap().contains("sweep.field_stp"));
}

#[test]
fn compute_error_exits_four() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 0.0);
    // a single straight resonance cannot constrain two parameters
    write(dir.path(), "one.csv", "H_T,family,m,coordinate,residual\n0.29,mm,1,1.0,0.0\n");
    let o = magcav(dir.path(), &["fit-params", "-c", cfg.to_str().unwrap(), "-i", "one.csv"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("kind=rank-deficient"));
}

#[test]
fn seed_controls_noise() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cfg = small_config(d, 1e-4);
    let c = cfg.to_str().unwrap();
    for (name, seed) in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "2")] {
        assert_ok(&magcav(d, &["--quiet", "--seed", seed, "simulate-map", "-c", c, "-o", name]));
    }
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn render_is_deterministic_and_writes_sidecar() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cfg = small_config(d, 0.0);
    assert_ok(&magcav(d, &["--quiet", "simulate-map", "-c", cfg.to_str().unwrap(), "-o", "m.csv", "--image", "a.ppm"]));
    assert_ok(&magcav(d, &["--quiet", "render", "-i", "m.csv", "-o", "b.ppm"]));
    let a = std::fs::read(d.join("a.ppm")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.ppm")).unwrap());
    assert!(a.starts_with(b"P6\n31 161\n255\n"));
    let side = std::fs::read_to_string(d.join("b.ppm.txt")).unwrap();
    assert!(side.contains("palette=viridis"));
}

#[test]
fn rescale_produces_uniform_coordinate_axis() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cfg = small_config(d, 0.0);
    let c = cfg.to_str().unwrap();
    assert_ok(&magcav(d, &["--quiet", "simulate-map", "-c", c, "-o", "m.csv"]));
    let o = magcav(d, &["--json", "rescale", "-c", c, "-i", "m.csv", "-o", "r.csv", "--uniform", "21", "--range", "0", "10"]);
    assert_ok(&o);
    let log: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(log["event"], "rescale");
    assert_eq!(log["data"]["rows"], 21);
    let text = std::fs::read_to_string(d.join("r.csv")).unwrap();
    let mut coords: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    coords.dedup();
    assert_eq!(coords.len(), 21);
    assert_eq!(coords[0], 0.0);
    assert_eq!(coords[20], 10.0);
}

#[test]
fn pulse_trace_and_raster() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cfg = small_config(d, 0.0);
    let o = magcav(
        d,
        &["simulate-pulse", "-c", cfg.to_str().unwrap(), "-o", "t.csv", "--raster", "r.csv", "--image", "r.ppm"],
    );
    assert_ok(&o);
    let trace = std::fs::read_to_string(d.join("t.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("t_us,env"));
    // 0.8 μs at 250 ps plus the t = 0 sample
    assert_eq!(trace.lines().count(), 1 + 3201);
    let raster = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(raster.lines().next(), Some("H_T,t_us,env"));
    assert_eq!(raster.lines().count(), 1 + 31 * 801);
    assert!(d.join("r.ppm.txt").exists());
    assert!(stderr(&o).contains("rabi_period_ns="));
}

#[test]
fn missing_input_is_io_error() {
    let dir = TempDir::new().unwrap();
    let o = magcav(dir.path(), &["render", "-i", "absent.csv", "-o", "x.ppm"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("kind=io"));
}
