use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const REFERENCE: &str = "units = \"si\"
mass_m = 1e-13
mass_M = 1e-13
separation_h = 1e-8
cavity_length_d = 0.1
bare_freq_a = 3e3
bare_freq_b = 2.7e3
light_freq_c = 450e12
light_freq_d = 450e12
beta_m = 1.0
beta_M = 1.0
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_optograv"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid json")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn derive_reports_period_shift() {
    let j = stdout_json(&run(&["derive", "--format", "json"]));
    let ns = j["couplings"]["delta_T_ns"].as_f64().unwrap();
    assert!((ns - 0.78).abs() < 0.01, "{ns}");
    assert_eq!(j["provenance"]["code_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn derive_without_gravity_has_no_shift() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g0.toml", &format!("{REFERENCE}grav_constant_G = 0.0\n"));
    let j = stdout_json(&run(&["derive", "--format", "json", "--params", cfg.to_str().unwrap()]));
    assert_eq!(j["couplings"]["delta_T_ns"].as_f64().unwrap(), 0.0);
    assert_eq!(j["couplings"]["gamma"].as_f64().unwrap(), 0.0);
    assert_eq!(j["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &REFERENCE.replace("mass_M = 1e-13\n", ""));
    let o = run(&["derive", "--params", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mass_M"), "{}", stderr(&o));
}

#[test]
fn syntax_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &REFERENCE.replace("separation_h = 1e-8", "separation_h = = 1e-8"));
    let o = run(&["derive", "--params", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn mode_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "si.toml", REFERENCE);
    let o = run(&["derive", "--mode", "dimensionless", "--params", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fig2a_trace_shape() {
    let o = run(&["figure", "--which", "fig2a", "--format", "json", "--t-points", "1025"]);
    let j = stdout_json(&o);
    let values: Vec<f64> = j["trace"]["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(values.len(), 1025);
    assert_eq!(values[0], 1.0);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((min - 0.673368).abs() < 1e-5, "{min}");
    assert_eq!(j["trace"]["method"], "uncoupled");
}

#[test]
fn fig2b_csv_has_provenance_and_header() {
    let o = run(&["figure", "--which", "fig2b", "--t-points", "16"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# optograv"));
    assert!(lines.iter().any(|l| l.starts_with("# params_fingerprint ")));
    let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
    assert_eq!(lines[header], "t_seconds,value,method");
    assert_eq!(lines.len() - header - 1, 16);
}

#[test]
fn fig3_is_flat_without_gravity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.toml",
        "units = \"dimensionless\"\nomega_b = 0.9\nlambda_m = 0.44\nlambda_M = 0.52\ngamma = 0.0\nbeta_m = 1.0\nbeta_M = 1.0\n",
    );
    let o = run(&["figure", "--which", "fig3", "--format", "json", "--t-points", "9", "--params", cfg.to_str().unwrap()]);
    let j = stdout_json(&o);
    assert!(j["trace"]["values"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() == 0.0));
    let t = j["trace"]["t_periods"].as_array().unwrap();
    assert_eq!(t.last().unwrap().as_f64().unwrap(), 3.0);
}

#[test]
fn bad_time_grid_is_rejected() {
    let o = run(&["figure", "--which", "fig2a", "--t-points", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["figure", "--which", "fig2a", "--t-start", "1", "--t-stop", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_rejects_tiny_truncation() {
    let o = run(&["oracle", "--n-max", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("truncation"), "{}", stderr(&o));
}

#[test]
fn feasibility_table() {
    let j = stdout_json(&run(&["feasibility", "--format", "json"]));
    let rows = j["rows"].as_array().unwrap();
    let zero = rows.iter().find(|r| r["given"] == "temperature" && r["temperature_T"] == 0.0).unwrap();
    assert_eq!(zero["quality_factor_Q"].as_f64().unwrap(), 0.0);
    assert_eq!(zero["nbar"].as_f64().unwrap(), 0.0);
    let q7 = rows.iter().find(|r| r["given"] == "quality" && r["quality_factor_Q"] == 1e7).unwrap();
    let t = q7["temperature_T"].as_f64().unwrap();
    assert!((t - 0.23).abs() < 0.23 * 0.05, "{t}");
    let width = |temp: f64| {
        rows.iter()
            .find(|r| r["given"] == "temperature" && r["temperature_T"] == temp)
            .unwrap()["revival_width"]
            .as_f64()
            .unwrap()
    };
    assert!((width(0.4) / width(0.1) - 0.5).abs() < 1e-3);
}

#[test]
fn scan_follows_inverse_cube() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scan.toml",
        &format!("{REFERENCE}[scan]\nobservables = [\"delta_T\"]\n[scan.axes]\nseparation_h = [1e-8, 2e-8, 4e-8]\n"),
    );
    let j = stdout_json(&run(&["scan", "--format", "json", "--params", cfg.to_str().unwrap()]));
    let d: Vec<f64> = j["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["values"][0].as_f64().unwrap())
        .collect();
    assert!((d[0] / d[1] - 8.0).abs() < 1e-4);
    assert!((d[0] / d[2] - 64.0).abs() < 1e-3);
}

#[test]
fn scan_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "axis.toml",
        &format!("{REFERENCE}[scan]\nobservables = [\"delta_T\"]\n[scan.axes]\nheight = [1e-8]\n"),
    );
    let o = run(&["scan", "--params", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("separation_h"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "empty.toml", &format!("{REFERENCE}[scan]\nobservables = []\n"));
    let o = run(&["scan", "--params", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));

    let o = run(&["scan"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn thermal_small_run_passes_and_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "th.toml",
        &format!("{REFERENCE}seed = 5\n[thermal]\nnbar = [1.0]\nn_samples = 2000\nt_points = 3\n"),
    );
    let a = run(&["thermal", "--params", cfg.to_str().unwrap()]);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = run(&["thermal", "--params", cfg.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["thermal", "--params", cfg.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().contains("# seed 5"));
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    assert!(run(&["derive", "--out", out.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), run(&["derive"]).stdout);
}
