//! Parameter sweeps, first-order scaling studies and convergence audits.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analytic::{self, FirstOrderForm};
use crate::error::{Error, Result};
use crate::oracle::hilbert::{coherent_state, path_superposition};
use crate::oracle::interaction::DEFAULT_MARGIN;
use crate::oracle::{
    build_hamiltonian, dyson_first_order_state, interaction_picture_check, linear_entropy_rod_a, visibility_exact,
    HamiltonianKind, HilbertSpec, Propagator, StateVector,
};
use crate::params::{DimensionlessParams, Model, Params, Rod};
use crate::quadrature::QuadratureSpec;

pub const MAX_GRID: usize = 1_000_000;

/// Extra Fock levels used to measure the truncation sensitivity of a row.
pub const TRUNCATION_PROBE: usize = 8;

const SI_AXES: [&str; 13] = [
    "mass_m",
    "mass_M",
    "separation_h",
    "cavity_length_d",
    "bare_freq_a",
    "bare_freq_b",
    "light_freq_c",
    "light_freq_d",
    "beta_m",
    "beta_M",
    "rod_half_length_L",
    "grav_constant_G",
    "hbar",
];

const DIMENSIONLESS_AXES: [&str; 7] = ["omega_a", "omega_b", "lambda_m", "lambda_M", "gamma", "beta_m", "beta_M"];

/// Quantities a scan can record per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    #[serde(rename = "delta_T")]
    DeltaT,
    Gamma,
    OmegaA,
    OmegaB,
    LambdaM,
    #[serde(rename = "lambda_M")]
    LambdaBigM,
    VisibilityUncoupled,
    VisibilityFirstOrder,
    VisibilityShift,
    EntropyFirstOrder,
    VisibilityExact,
    EntropyExact,
    InteractionResidual,
}

impl Observable {
    pub const ALL: [Observable; 13] = [
        Observable::DeltaT,
        Observable::Gamma,
        Observable::OmegaA,
        Observable::OmegaB,
        Observable::LambdaM,
        Observable::LambdaBigM,
        Observable::VisibilityUncoupled,
        Observable::VisibilityFirstOrder,
        Observable::VisibilityShift,
        Observable::EntropyFirstOrder,
        Observable::VisibilityExact,
        Observable::EntropyExact,
        Observable::InteractionResidual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::DeltaT => "delta_T",
            Observable::Gamma => "gamma",
            Observable::OmegaA => "omega_a",
            Observable::OmegaB => "omega_b",
            Observable::LambdaM => "lambda_m",
            Observable::LambdaBigM => "lambda_M",
            Observable::VisibilityUncoupled => "visibility_uncoupled",
            Observable::VisibilityFirstOrder => "visibility_first_order",
            Observable::VisibilityShift => "visibility_shift",
            Observable::EntropyFirstOrder => "entropy_first_order",
            Observable::VisibilityExact => "visibility_exact",
            Observable::EntropyExact => "entropy_exact",
            Observable::InteractionResidual => "interaction_residual",
        }
    }

    /// Needs exact propagation.
    pub fn needs_oracle(self) -> bool {
        matches!(
            self,
            Observable::VisibilityExact | Observable::EntropyExact | Observable::InteractionResidual
        )
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Observable::ALL.into_iter().find(|o| o.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Observable::ALL.iter().map(|o| o.name()).collect();
            format!("unknown observable `{s}`; valid: {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan {
    pub base: Params,
    /// `(parameter name, values)`; the first axis varies slowest.
    pub axes: Vec<(String, Vec<f64>)>,
    pub observables: Vec<Observable>,
    /// Evaluation time; defaults to one period `2π/ω_a` of each row.
    pub t_eval: Option<f64>,
    pub oracle_enabled: bool,
    pub seed: u64,
}

/// Axis names accepted in the given mode.
pub fn valid_axes(base: &Params) -> &'static [&'static str] {
    match base {
        Params::Si(_) => &SI_AXES,
        Params::Dimensionless(_) => &DIMENSIONLESS_AXES,
    }
}

impl ScanPlan {
    pub fn grid_size(&self) -> usize {
        self.axes
            .iter()
            .try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()))
            .unwrap_or(usize::MAX)
    }

    pub fn validate(&self) -> Result<()> {
        let valid = valid_axes(&self.base);
        for (i, (name, values)) in self.axes.iter().enumerate() {
            if !valid.contains(&name.as_str()) {
                return Err(Error::config(format!(
                    "unknown axis `{name}`; valid keys: {}",
                    valid.join(", ")
                )));
            }
            if self.axes[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::config(format!("axis `{name}` given twice")));
            }
            if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!("axis `{name}` needs finite values")));
            }
        }
        if self.observables.is_empty() {
            return Err(Error::config("observable list is empty"));
        }
        if let Some(o) = self.observables.iter().find(|o| o.needs_oracle()) {
            if !self.oracle_enabled {
                return Err(Error::config(format!("observable `{o}` needs oracle_enabled = true")));
            }
        }
        if let Some(t) = self.t_eval {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::config(format!("t_eval must be finite and non-negative, got {t}")));
            }
        }
        if self.grid_size() > MAX_GRID {
            return Err(Error::config(format!("grid has {} points; the limit is {MAX_GRID}", self.grid_size())));
        }
        Ok(())
    }

    /// Parameter tuple of row `index`.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut point = vec![0.0; self.axes.len()];
        for (k, (_, values)) in self.axes.iter().enumerate().rev() {
            point[k] = values[index % values.len()];
            index /= values.len();
        }
        point
    }

    fn params_at(&self, point: &[f64]) -> Params {
        let mut params = self.base.clone();
        for ((name, _), v) in self.axes.iter().zip(point) {
            set_axis(&mut params, name, *v);
        }
        params
    }
}

fn set_axis(params: &mut Params, name: &str, v: f64) {
    match params {
        Params::Si(p) => match name {
            "mass_m" => p.mass_m = v,
            "mass_M" => p.mass_M = v,
            "separation_h" => p.separation_h = v,
            "cavity_length_d" => p.cavity_length_d = v,
            "bare_freq_a" => p.bare_freq_a = v,
            "bare_freq_b" => p.bare_freq_b = v,
            "light_freq_c" => p.light_freq_c = v,
            "light_freq_d" => p.light_freq_d = v,
            "beta_m" => p.beta_m = Complex64::new(v, 0.0),
            "beta_M" => p.beta_M = Complex64::new(v, 0.0),
            "rod_half_length_L" => p.rod_half_length_L = Some(v),
            "grav_constant_G" => p.grav_constant_G = v,
            "hbar" => p.hbar = v,
            _ => unreachable!("axis names are validated"),
        },
        Params::Dimensionless(p) => match name {
            "omega_a" => p.omega_a = v,
            "omega_b" => p.omega_b = v,
            "lambda_m" => p.lambda_m = v,
            "lambda_M" => p.lambda_M = v,
            "gamma" => p.gamma = v,
            "beta_m" => p.beta_m = Complex64::new(v, 0.0),
            "beta_M" => p.beta_M = Complex64::new(v, 0.0),
            _ => unreachable!("axis names are validated"),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowDiagnostics {
    pub t_eval: Option<f64>,
    pub error: Option<String>,
    pub n_max_a: Option<usize>,
    pub n_max_b: Option<usize>,
    /// Largest change of the exact observables when `n_max` grows by 8.
    pub truncation_delta: Option<f64>,
    /// Last node-doubling change of the first-order entropy.
    pub quadrature_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub index: usize,
    pub point: Vec<f64>,
    /// One entry per observable; `None` where the row failed.
    pub values: Vec<Option<f64>>,
    pub diagnostics: RowDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub code_version: String,
    pub seed: u64,
    pub params_fingerprint: String,
    pub config_sha256: Option<String>,
}

impl Provenance {
    pub fn new(seed: u64, params: &Params, config_sha256: Option<String>) -> Self {
        Provenance {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            params_fingerprint: params.model().map(|m| m.fingerprint()).unwrap_or_else(|_| "invalid".into()),
            config_sha256,
        }
    }

    /// `#`-prefixed comment lines for CSV output.
    pub fn comment_lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("# optograv {}", self.code_version),
            format!("# seed {}", self.seed),
            format!("# params_fingerprint {}", self.params_fingerprint),
        ];
        if let Some(h) = &self.config_sha256 {
            v.push(format!("# config_sha256 {h}"));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub axes: Vec<String>,
    pub observables: Vec<Observable>,
    pub rows: Vec<ScanRow>,
    pub provenance: Provenance,
}

/// Formats a number so that it round-trips exactly.
pub fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

impl ScanResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for line in self.provenance.comment_lines() {
            writeln!(w, "{line}")?;
        }
        let mut header: Vec<String> = self.axes.clone();
        header.extend(self.observables.iter().map(|o| o.name().to_string()));
        header.extend(
            ["t_eval", "n_max_a", "n_max_b", "truncation_delta", "quadrature_delta", "error"].map(String::from),
        );
        writeln!(w, "{}", header.join(","))?;
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        let opt_n = |x: Option<usize>| x.map(|n| n.to_string()).unwrap_or_default();
        for row in &self.rows {
            let mut cells: Vec<String> = row.point.iter().map(|x| fmt_num(*x)).collect();
            cells.extend(row.values.iter().map(|v| opt(*v)));
            let d = &row.diagnostics;
            cells.push(opt(d.t_eval));
            cells.push(opt_n(d.n_max_a));
            cells.push(opt_n(d.n_max_b));
            cells.push(opt(d.truncation_delta));
            cells.push(opt(d.quadrature_delta));
            cells.push(d.error.as_deref().map(csv_escape).unwrap_or_default());
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("scan result serializes")
    }
}

fn csv_escape(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Exact state of `model` at `t` on `spec`, built without the adequacy gate.
fn exact_state(model: &Model, spec: HilbertSpec, t: f64) -> Result<StateVector> {
    let h = build_hamiltonian(model, spec, HamiltonianKind::Full)?;
    let psi0 = StateVector::product(
        spec,
        &path_superposition(),
        &path_superposition(),
        &coherent_state(model.beta_m, spec.levels_a()),
        &coherent_state(model.beta_M, spec.levels_b()),
    );
    Ok(Propagator::new(&h)?.propagate(&psi0, t))
}

fn evaluate_row(plan: &ScanPlan, index: usize) -> ScanRow {
    let point = plan.point(index);
    let mut diagnostics = RowDiagnostics {
        t_eval: None,
        error: None,
        n_max_a: None,
        n_max_b: None,
        truncation_delta: None,
        quadrature_delta: None,
    };
    let values = match evaluate_point(plan, &point, &mut diagnostics) {
        Ok(v) => v.into_iter().map(Some).collect(),
        Err(e) => {
            diagnostics.error = Some(e.to_string());
            vec![None; plan.observables.len()]
        }
    };
    ScanRow {
        index,
        point,
        values,
        diagnostics,
    }
}

fn evaluate_point(plan: &ScanPlan, point: &[f64], diag: &mut RowDiagnostics) -> Result<Vec<f64>> {
    let model = plan.params_at(point).model()?;
    let dc = model.couplings;
    let t = plan.t_eval.unwrap_or_else(|| model.period());
    diag.t_eval = Some(t);

    let mut exact: Option<(f64, f64)> = None;
    let mut spec = None;
    if plan.oracle_enabled {
        let s = HilbertSpec::for_model(&model)?;
        s.check_adequacy(&model)?;
        let probe = HilbertSpec::new(s.n_max_a + TRUNCATION_PROBE, s.n_max_b + TRUNCATION_PROBE)?;
        let psi = exact_state(&model, s, t)?;
        let psi_probe = exact_state(&model, probe, t)?;
        let v = visibility_exact(&psi, Rod::A)?;
        let e = linear_entropy_rod_a(&psi)?;
        let dv = (visibility_exact(&psi_probe, Rod::A)? - v).abs();
        let de = (linear_entropy_rod_a(&psi_probe)? - e).abs();
        diag.n_max_a = Some(s.n_max_a);
        diag.n_max_b = Some(s.n_max_b);
        diag.truncation_delta = Some(dv.max(de));
        exact = Some((v, e));
        spec = Some(s);
    }

    let mut out = Vec::with_capacity(plan.observables.len());
    for o in &plan.observables {
        let value = match o {
            Observable::DeltaT => dc.delta_T,
            Observable::Gamma => dc.gamma,
            Observable::OmegaA => dc.omega_a,
            Observable::OmegaB => dc.omega_b,
            Observable::LambdaM => dc.lambda_m,
            Observable::LambdaBigM => dc.lambda_M,
            Observable::VisibilityUncoupled => analytic::visibility_uncoupled(&model, Rod::A, &[t])?.values[0],
            Observable::VisibilityFirstOrder => first_order_at(&model, t)?,
            Observable::VisibilityShift => shift_at(&model, t)?,
            Observable::EntropyFirstOrder => {
                let s = match spec {
                    Some(s) => s,
                    None => HilbertSpec::for_model(&model)?,
                };
                let e = analytic::linear_entropy_first_order(&model, s, t, &QuadratureSpec::default())?;
                diag.quadrature_delta = Some(e.quadrature_delta);
                e.value
            }
            Observable::VisibilityExact => exact.expect("oracle enabled").0,
            Observable::EntropyExact => exact.expect("oracle enabled").1,
            Observable::InteractionResidual => {
                interaction_picture_check(&model, spec.expect("oracle enabled"), t, DEFAULT_MARGIN).relative
            }
        };
        out.push(value);
    }
    Ok(out)
}

/// First-order visibility at one time, falling back to the integral form
/// when the closed form does not apply.
fn first_order_at(model: &Model, t: f64) -> Result<f64> {
    match analytic::visibility_first_order(model, &[t], FirstOrderForm::Closed) {
        Err(Error::DegenerateFrequencies { .. } | Error::ComplexAmplitude { .. }) => {
            Ok(analytic::visibility_first_order(model, &[t], FirstOrderForm::Integral)?.values[0])
        }
        r => Ok(r?.values[0]),
    }
}

fn shift_at(model: &Model, t: f64) -> Result<f64> {
    match analytic::visibility_shift(model, &[t], FirstOrderForm::Closed) {
        Err(Error::DegenerateFrequencies { .. } | Error::ComplexAmplitude { .. }) => {
            Ok(analytic::visibility_shift(model, &[t], FirstOrderForm::Integral)?.values[0])
        }
        r => Ok(r?.values[0]),
    }
}

/// Evaluates every grid point. Row failures are recorded in the row's
/// diagnostics; rows come back in grid order whatever the thread count.
pub fn run_scan(plan: &ScanPlan, config_sha256: Option<String>) -> Result<ScanResult> {
    plan.validate()?;
    let rows = (0..plan.grid_size()).into_par_iter().map(|i| evaluate_row(plan, i)).collect();
    Ok(ScanResult {
        axes: plan.axes.iter().map(|(n, _)| n.clone()).collect(),
        observables: plan.observables.clone(),
        rows,
        provenance: Provenance::new(plan.seed, &plan.base, config_sha256),
    })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% Student-t band on the slope; absent with only two points.
    pub slope_ci95: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FitOutcome {
    Fitted(LogLogFit),
    Refused { reason: String },
}

impl FitOutcome {
    pub fn slope(&self) -> Option<f64> {
        match self {
            FitOutcome::Fitted(f) => Some(f.slope),
            FitOutcome::Refused { .. } => None,
        }
    }
}

/// Fits `ln y = s ln x + c`. Refuses non-positive data, fewer than two
/// distinct abscissae, and residuals that do not shrink with `x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> FitOutcome {
    let refuse = |reason: String| FitOutcome::Refused { reason };
    if x.len() != y.len() {
        return refuse("abscissa and ordinate lengths differ".into());
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return refuse("log-log fit needs finite positive data (zero coupling or zero residual present)".into());
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) || pairs.len() < 2 {
        return refuse("need at least two distinct abscissae".into());
    }
    if pairs.windows(2).any(|w| w[1].1 <= w[0].1) {
        return refuse("residuals are not monotone in the coupling".into());
    }
    let n = pairs.len() as f64;
    let lx: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_ci95 = if pairs.len() > 2 {
        let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let se = (rss / (n - 2.0) / sxx).sqrt();
        let q = StudentsT::new(0.0, 1.0, n - 2.0).expect("positive dof").inverse_cdf(0.975);
        Some((slope - q * se, slope + q * se))
    } else {
        None
    };
    FitOutcome::Fitted(LogLogFit {
        slope,
        intercept,
        slope_ci95,
    })
}

/// Raw residuals and fitted exponents of a first-order scaling study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingStudy {
    pub t: f64,
    pub n_max_a: usize,
    pub n_max_b: usize,
    pub gammas: Vec<f64>,
    /// `‖ψ_exact − ψ⁽⁰⁾ − ψ⁽¹⁾‖`.
    pub state_residuals: Vec<f64>,
    /// `|V_exact − V_first_order|`.
    pub visibility_residuals: Vec<f64>,
    /// `|V_first_order − V₀|`, for scale.
    pub visibility_shifts: Vec<f64>,
    /// `|S_exact − S_second_order|`.
    pub entropy_residuals: Vec<f64>,
    /// `|S_exact − S_local_inclusive|`.
    pub entropy_local_inclusive_residuals: Vec<f64>,
    pub entropy_exact: Vec<f64>,
    pub state_fit: FitOutcome,
    pub visibility_fit: FitOutcome,
    pub entropy_fit: FitOutcome,
}

/// Compares exact propagation with the first-order formulas for each `γ`.
///
/// `base` supplies everything except `γ`. Residuals are fitted against `|γ|`
/// on a log-log scale.
pub fn scaling_study(
    base: &DimensionlessParams,
    gammas: &[f64],
    t: f64,
    spec: HilbertSpec,
    quad: &QuadratureSpec,
) -> Result<ScalingStudy> {
    if gammas.is_empty() {
        return Err(Error::Fit("no coupling values given".into()));
    }
    struct Point {
        state: f64,
        vis: f64,
        shift: f64,
        entropy: f64,
        entropy_local: f64,
        s_exact: f64,
    }
    let points: Result<Vec<Point>> = gammas
        .par_iter()
        .map(|g| {
            let model = Params::Dimensionless(DimensionlessParams { gamma: *g, ..base.clone() }).model()?;
            spec.check_adequacy(&model)?;
            let exact = exact_state(&model, spec, t)?;
            let free = analytic::free_state(&model, spec, t)?;
            let (corr, _) = dyson_first_order_state(&model, &free, quad)?;
            let state = (&exact.amplitudes - &free.amplitudes - &corr.amplitudes).norm();
            let v1 = first_order_at(&model, t)?;
            let v0 = analytic::visibility_uncoupled(&model, Rod::A, &[t])?.values[0];
            let s_exact = linear_entropy_rod_a(&exact)?;
            let s = analytic::linear_entropy_first_order(&model, spec, t, quad)?;
            Ok(Point {
                state,
                vis: (visibility_exact(&exact, Rod::A)? - v1).abs(),
                shift: (v1 - v0).abs(),
                entropy: (s_exact - s.value).abs(),
                entropy_local: (s_exact - s.local_inclusive).abs(),
                s_exact,
            })
        })
        .collect();
    let points = points?;
    let abs_g: Vec<f64> = gammas.iter().map(|g| g.abs()).collect();
    let col = |f: fn(&Point) -> f64| points.iter().map(f).collect::<Vec<f64>>();
    let state_residuals = col(|p| p.state);
    let visibility_residuals = col(|p| p.vis);
    let entropy_residuals = col(|p| p.entropy);
    Ok(ScalingStudy {
        t,
        n_max_a: spec.n_max_a,
        n_max_b: spec.n_max_b,
        gammas: gammas.to_vec(),
        state_fit: fit_loglog(&abs_g, &state_residuals),
        visibility_fit: fit_loglog(&abs_g, &visibility_residuals),
        entropy_fit: fit_loglog(&abs_g, &entropy_residuals),
        state_residuals,
        visibility_residuals,
        visibility_shifts: col(|p| p.shift),
        entropy_residuals,
        entropy_local_inclusive_residuals: col(|p| p.entropy_local),
        entropy_exact: col(|p| p.s_exact),
    })
}

/// Sensitivity of the headline observables to truncation and quadrature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub ladder: Vec<usize>,
    pub times: Vec<f64>,
    /// Exact rod-A visibility, one row per ladder rung.
    pub visibility: Vec<Vec<f64>>,
    /// Largest visibility change between successive rungs.
    pub max_visibility_delta: f64,
    pub entropy_first_order: f64,
    /// Relative change of the first-order entropy in the last node doubling.
    pub entropy_relative_delta: f64,
    pub entropy_nodes: usize,
    pub tolerance_visibility: f64,
    pub tolerance_entropy: f64,
    pub passed: bool,
}

/// Re-evaluates the exact visibility on each `n_max` of `ladder` (both
/// modes) at `times`, and the first-order entropy at the last time with node
/// doubling.
pub fn convergence_audit(model: &Model, ladder: &[usize], times: &[f64]) -> Result<ConvergenceReport> {
    if ladder.len() < 2 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("convergence ladder needs at least two increasing n_max values"));
    }
    analytic::validate_times(times)?;
    let visibility: Result<Vec<Vec<f64>>> = ladder
        .iter()
        .map(|n| {
            let spec = HilbertSpec::new(*n, *n)?;
            let h = build_hamiltonian(model, spec, HamiltonianKind::Full)?;
            let prop = Propagator::new(&h)?;
            let psi0 = StateVector::product(
                spec,
                &path_superposition(),
                &path_superposition(),
                &coherent_state(model.beta_m, spec.levels_a()),
                &coherent_state(model.beta_M, spec.levels_b()),
            );
            prop.propagate_many(&psi0, times)
                .iter()
                .map(|psi| visibility_exact(psi, Rod::A))
                .collect()
        })
        .collect();
    let visibility = visibility?;
    let max_visibility_delta = visibility
        .windows(2)
        .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);

    let top = HilbertSpec::new(*ladder.last().unwrap(), *ladder.last().unwrap())?;
    let t_last = *times.last().unwrap();
    let quad = QuadratureSpec::with_rel_tol(1e-10);
    let s = analytic::linear_entropy_first_order(model, top, t_last, &quad)?;
    let entropy_relative_delta = if s.value == 0.0 { 0.0 } else { s.quadrature_delta / s.value };
    let (tolerance_visibility, tolerance_entropy) = (1e-9, 1e-8);
    Ok(ConvergenceReport {
        ladder: ladder.to_vec(),
        times: times.to_vec(),
        visibility,
        max_visibility_delta,
        entropy_first_order: s.value,
        entropy_relative_delta,
        entropy_nodes: s.nodes,
        tolerance_visibility,
        tolerance_entropy,
        passed: max_visibility_delta < tolerance_visibility && entropy_relative_delta < tolerance_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhysicalParams;
    use approx::assert_relative_eq;

    fn plan(axes: Vec<(&str, Vec<f64>)>, observables: Vec<Observable>) -> ScanPlan {
        ScanPlan {
            base: Params::Si(PhysicalParams::reference()),
            axes: axes.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
            observables,
            t_eval: None,
            oracle_enabled: false,
            seed: 1,
        }
    }

    #[test]
    fn delta_t_follows_inverse_cube() {
        let p = plan(vec![("separation_h", vec![1e-8, 2e-8, 4e-8])], vec![Observable::DeltaT]);
        let r = run_scan(&p, None).unwrap();
        let d: Vec<f64> = r.rows.iter().map(|row| row.values[0].unwrap()).collect();
        assert_relative_eq!(d[1] / d[0], 1.0 / 8.0, max_relative = 1e-5);
        assert_relative_eq!(d[2] / d[0], 1.0 / 64.0, max_relative = 1e-5);
    }

    #[test]
    fn empty_axes_give_one_row() {
        let r = run_scan(&plan(vec![], vec![Observable::Gamma]), None).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].point.is_empty());
    }

    #[test]
    fn no_gravity_zeroes_gravity_observables() {
        let p = plan(
            vec![("grav_constant_G", vec![0.0]), ("separation_h", vec![1e-8, 3e-8])],
            vec![Observable::DeltaT, Observable::Gamma, Observable::VisibilityShift],
        );
        for row in run_scan(&p, None).unwrap().rows {
            assert!(row.values.iter().all(|v| *v == Some(0.0)), "{row:?}");
        }
    }

    #[test]
    fn row_errors_do_not_abort() {
        let p = plan(vec![("separation_h", vec![1e-8, 0.0])], vec![Observable::DeltaT]);
        let r = run_scan(&p, None).unwrap();
        assert!(r.rows[0].diagnostics.error.is_none());
        assert!(r.rows[1].diagnostics.error.as_ref().unwrap().contains("separation_h"));
        assert_eq!(r.rows[1].values, vec![None]);
    }

    #[test]
    fn validation() {
        let bad_axis = plan(vec![("mass_x", vec![1.0])], vec![Observable::Gamma]);
        let msg = bad_axis.validate().unwrap_err().to_string();
        assert!(msg.contains("mass_x") && msg.contains("separation_h"), "{msg}");
        assert!(plan(vec![], vec![]).validate().is_err());
        assert!(plan(vec![], vec![Observable::VisibilityExact]).validate().is_err());
        let big = plan(
            vec![("mass_m", vec![1.0; 1001]), ("mass_M", vec![1.0; 1000])],
            vec![Observable::Gamma],
        );
        assert!(big.validate().is_err());
        assert!("nonsense".parse::<Observable>().is_err());
        assert_eq!("delta_T".parse::<Observable>().unwrap(), Observable::DeltaT);
    }

    #[test]
    fn axis_permutation_only_reorders_rows() {
        let a = run_scan(
            &plan(
                vec![("mass_m", vec![1e-13, 2e-13]), ("separation_h", vec![1e-8, 2e-8, 3e-8])],
                vec![Observable::Gamma, Observable::VisibilityShift],
            ),
            None,
        )
        .unwrap();
        let b = run_scan(
            &plan(
                vec![("separation_h", vec![1e-8, 2e-8, 3e-8]), ("mass_m", vec![1e-13, 2e-13])],
                vec![Observable::Gamma, Observable::VisibilityShift],
            ),
            None,
        )
        .unwrap();
        for ra in &a.rows {
            let rb = b
                .rows
                .iter()
                .find(|r| r.point[0] == ra.point[1] && r.point[1] == ra.point[0])
                .unwrap();
            assert_eq!(ra.values, rb.values);
        }
    }

    #[test]
    fn csv_is_deterministic() {
        let p = plan(vec![("separation_h", vec![1e-8, 2e-8])], vec![Observable::DeltaT]);
        let emit = || {
            let mut buf = Vec::new();
            run_scan(&p, Some("abc".into())).unwrap().write_csv(&mut buf).unwrap();
            buf
        };
        let a = emit();
        assert_eq!(a, emit());
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("# config_sha256 abc"));
        assert!(text.contains("separation_h,delta_T,t_eval"));
    }

    #[test]
    fn fit_recovers_exponent() {
        let x = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2) * (1.0 + 0.01 * v.ln().sin())).collect();
        let FitOutcome::Fitted(f) = fit_loglog(&x, &y) else { panic!() };
        assert!((f.slope - 2.0).abs() < 0.02);
        let (lo, hi) = f.slope_ci95.unwrap();
        assert!(lo < f.slope && f.slope < hi);
    }

    #[test]
    fn fit_refusals() {
        assert!(matches!(fit_loglog(&[0.0, 0.0], &[0.0, 0.0]), FitOutcome::Refused { .. }));
        assert!(matches!(fit_loglog(&[1.0, 2.0], &[2.0, 1.0]), FitOutcome::Refused { .. }));
        assert!(matches!(fit_loglog(&[1.0], &[1.0]), FitOutcome::Refused { .. }));
        let FitOutcome::Fitted(f) = fit_loglog(&[1.0, 2.0], &[1.0, 4.0]) else { panic!() };
        assert_relative_eq!(f.slope, 2.0, max_relative = 1e-12);
        assert!(f.slope_ci95.is_none());
    }

    #[test]
    fn zero_coupling_study_refuses_fit() {
        let base = DimensionlessParams::boosted(0.0);
        let spec = HilbertSpec::new(26, 26).unwrap();
        let s = scaling_study(&base, &[0.0, 0.0], 1.0, spec, &QuadratureSpec::default()).unwrap();
        assert!(s.state_residuals.iter().all(|r| *r < 1e-12));
        assert!(s.entropy_exact.iter().all(|r| r.abs() < 1e-12));
        assert!(matches!(s.state_fit, FitOutcome::Refused { .. }));
        assert!(matches!(s.entropy_fit, FitOutcome::Refused { .. }));
    }

    #[test]
    fn audit_without_optomechanics_is_flat() {
        let mut p = DimensionlessParams::boosted(-0.01);
        p.lambda_m = 0.0;
        p.lambda_M = 0.0;
        let m = Params::Dimensionless(p).model().unwrap();
        let r = convergence_audit(&m, &[14, 18], &[std::f64::consts::TAU]).unwrap();
        assert!(r.max_visibility_delta < 1e-14, "{}", r.max_visibility_delta);
        assert!(convergence_audit(&m, &[18, 14], &[1.0]).is_err());
    }
}
