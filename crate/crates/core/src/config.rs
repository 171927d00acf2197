//! Run configuration in TOML.
//!
//! Keys are flat and named exactly like the parameter fields. `units`
//! selects the unit system (`"si"`, the default, or `"dimensionless"`).
//! Coherent amplitudes accept a number or an `[re, im]` pair.
//!
//! ```toml
//! units = "si"
//! mass_m = 1e-13
//! mass_M = 1e-13
//! separation_h = 1e-8
//! cavity_length_d = 0.1
//! bare_freq_a = 3e3
//! bare_freq_b = 2.7e3
//! light_freq_c = 450e12
//! light_freq_d = 450e12
//! beta_m = 1.0
//! beta_M = [1.0, 0.0]
//! seed = 7
//!
//! [scan]
//! observables = ["delta_T"]
//!
//! [scan.axes]
//! separation_h = [1e-8, 2e-8, 4e-8]
//! ```

use num_complex::Complex64;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::constants;
use crate::error::{Error, Result};
use crate::params::{DimensionlessParams, FrequencyConvention, Params, PhysicalParams};
use crate::scan::{Observable, ScanPlan};

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Amplitude {
    Real(f64),
    Pair([f64; 2]),
}

impl From<Amplitude> for Complex64 {
    fn from(a: Amplitude) -> Self {
        match a {
            Amplitude::Real(re) => Complex64::new(re, 0.0),
            Amplitude::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum UnitsKey {
    Si,
    Dimensionless,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiFile {
    #[serde(rename = "units")]
    _units: Option<UnitsKey>,
    mass_m: f64,
    mass_M: f64,
    separation_h: f64,
    cavity_length_d: f64,
    bare_freq_a: f64,
    bare_freq_b: f64,
    light_freq_c: f64,
    light_freq_d: f64,
    beta_m: Amplitude,
    beta_M: Amplitude,
    rod_half_length_L: Option<f64>,
    grav_constant_G: Option<f64>,
    hbar: Option<f64>,
    #[serde(default)]
    frequency_convention: FrequencyConvention,
    seed: Option<u64>,
    scan: Option<ScanSection>,
    thermal: Option<ThermalSection>,
    feasibility: Option<FeasibilitySection>,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimensionlessFile {
    #[serde(rename = "units")]
    _units: UnitsKey,
    #[serde(default = "one")]
    omega_a: f64,
    omega_b: f64,
    lambda_m: f64,
    lambda_M: f64,
    gamma: f64,
    beta_m: Amplitude,
    beta_M: Amplitude,
    seed: Option<u64>,
    scan: Option<ScanSection>,
    thermal: Option<ThermalSection>,
    feasibility: Option<FeasibilitySection>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanSection {
    #[serde(default)]
    axes: toml::Table,
    observables: Vec<String>,
    t_eval: Option<f64>,
    #[serde(default)]
    oracle_enabled: bool,
}

/// Thermal comparison settings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalSection {
    #[serde(default = "default_nbar")]
    pub nbar: Vec<f64>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Number of evaluation times, spread over one period.
    #[serde(default = "default_thermal_points")]
    pub t_points: usize,
}

fn default_nbar() -> Vec<f64> {
    vec![0.5, 1.0, 5.0]
}

fn default_samples() -> usize {
    10_000
}

fn default_thermal_points() -> usize {
    8
}

impl Default for ThermalSection {
    fn default() -> Self {
        ThermalSection {
            nbar: default_nbar(),
            n_samples: default_samples(),
            t_points: default_thermal_points(),
        }
    }
}

/// Grid for the decoherence-feasibility table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilitySection {
    /// Temperatures in K (dimensionless mode: units of ħω_a/k_B).
    #[serde(default = "default_temperatures")]
    pub temperatures: Vec<f64>,
    #[serde(default = "default_qualities")]
    pub qualities: Vec<f64>,
}

fn default_temperatures() -> Vec<f64> {
    vec![0.0, 0.01, 0.025, 0.1, 0.4, 1.0]
}

fn default_qualities() -> Vec<f64> {
    vec![1e5, 1e6, 1e7, 1e8]
}

impl Default for FeasibilitySection {
    fn default() -> Self {
        FeasibilitySection {
            temperatures: default_temperatures(),
            qualities: default_qualities(),
        }
    }
}

/// A parsed configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: Params,
    pub seed: Option<u64>,
    pub scan: Option<ScanPlan>,
    pub thermal: ThermalSection,
    pub feasibility: FeasibilitySection,
    /// Hex SHA-256 of the source text.
    pub source_sha256: String,
}

/// 1-based line of a byte offset.
fn line_of(src: &str, offset: usize) -> usize {
    src.as_bytes()[..offset.min(src.len())].iter().filter(|b| **b == b'\n').count() + 1
}

fn toml_error(src: &str, e: toml::de::Error) -> Error {
    Error::Config {
        line: e.span().map(|s| line_of(src, s.start)),
        message: e.message().trim().to_string(),
    }
}

/// Line where `key = ...` first appears at the start of a line, if any.
fn line_of_key(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl RunConfig {
    pub fn parse(src: &str) -> Result<RunConfig> {
        let table: toml::Table = toml::from_str(src).map_err(|e| toml_error(src, e))?;
        let units = match table.get("units") {
            None => UnitsKey::Si,
            Some(toml::Value::String(s)) if s == "si" => UnitsKey::Si,
            Some(toml::Value::String(s)) if s == "dimensionless" => UnitsKey::Dimensionless,
            Some(v) => {
                return Err(Error::Config {
                    line: line_of_key(src, "units"),
                    message: format!("`units` must be \"si\" or \"dimensionless\", got {v}"),
                })
            }
        };
        let (params, seed, scan, thermal, feasibility) = match units {
            UnitsKey::Si => {
                let f: SiFile = toml::from_str(src).map_err(|e| toml_error(src, e))?;
                let p = PhysicalParams {
                    mass_m: f.mass_m,
                    mass_M: f.mass_M,
                    separation_h: f.separation_h,
                    cavity_length_d: f.cavity_length_d,
                    bare_freq_a: f.bare_freq_a,
                    bare_freq_b: f.bare_freq_b,
                    light_freq_c: f.light_freq_c,
                    light_freq_d: f.light_freq_d,
                    beta_m: f.beta_m.into(),
                    beta_M: f.beta_M.into(),
                    rod_half_length_L: f.rod_half_length_L,
                    grav_constant_G: f.grav_constant_G.unwrap_or(constants::GRAVITATIONAL_CONSTANT),
                    hbar: f.hbar.unwrap_or(constants::HBAR),
                    frequency_convention: f.frequency_convention,
                };
                (Params::Si(p), f.seed, f.scan, f.thermal, f.feasibility)
            }
            UnitsKey::Dimensionless => {
                let f: DimensionlessFile = toml::from_str(src).map_err(|e| toml_error(src, e))?;
                let p = DimensionlessParams {
                    omega_a: f.omega_a,
                    omega_b: f.omega_b,
                    lambda_m: f.lambda_m,
                    lambda_M: f.lambda_M,
                    gamma: f.gamma,
                    beta_m: f.beta_m.into(),
                    beta_M: f.beta_M.into(),
                };
                (Params::Dimensionless(p), f.seed, f.scan, f.thermal, f.feasibility)
            }
        };
        params.validate().map_err(|e| match e {
            Error::Domain { ref field, .. } => Error::Config {
                line: line_of_key(src, field),
                message: e.to_string(),
            },
            other => other,
        })?;
        let scan = match scan {
            None => None,
            Some(s) => Some(scan_plan(src, s, &params, seed)?),
        };
        Ok(RunConfig {
            params,
            seed,
            scan,
            thermal: thermal.unwrap_or_default(),
            feasibility: feasibility.unwrap_or_default(),
            source_sha256: hex::encode(Sha256::digest(src.as_bytes())),
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<RunConfig> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&src)
    }
}

fn scan_plan(src: &str, s: ScanSection, params: &Params, seed: Option<u64>) -> Result<ScanPlan> {
    let mut axes = Vec::new();
    for (name, value) in s.axes {
        let values = match value {
            toml::Value::Array(items) => items
                .into_iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(x),
                    toml::Value::Integer(i) => Ok(i as f64),
                    other => Err(Error::Config {
                        line: line_of_key(src, &name),
                        message: format!("axis `{name}` holds a non-numeric value {other}"),
                    }),
                })
                .collect::<Result<Vec<f64>>>()?,
            other => {
                return Err(Error::Config {
                    line: line_of_key(src, &name),
                    message: format!("axis `{name}` must be an array of numbers, got {other}"),
                })
            }
        };
        axes.push((name, values));
    }
    let observables = s
        .observables
        .iter()
        .map(|o| {
            o.parse::<Observable>().map_err(|e| Error::Config {
                line: line_of_key(src, "observables"),
                message: e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = ScanPlan {
        base: params.clone(),
        axes,
        observables,
        t_eval: s.t_eval,
        oracle_enabled: s.oracle_enabled,
        seed: seed.unwrap_or(0),
    };
    plan.validate().map_err(|e| match e {
        Error::Config { line: None, message } => Error::Config {
            line: line_of_key(src, "observables").filter(|_| message.contains("observable")),
            message,
        },
        other => other,
    })?;
    Ok(plan)
}
