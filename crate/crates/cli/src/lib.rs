//! Command-line front end: argument parsing, subcommand dispatch and report
//! emission.
//!
//! Exit codes: 0 success, 1 user or config error, 2 tolerance failure,
//! 3 numerical non-convergence.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use optograv::analytic::{self, FirstOrderForm, VisibilityTrace};
use optograv::config::RunConfig;
use optograv::oracle::interaction::DEFAULT_MARGIN;
use optograv::oracle::{
    build_hamiltonian, initial_state, interaction_picture_check, thermal_visibility_montecarlo, visibility_exact,
    HamiltonianKind, HilbertSpec, Propagator, SamplePath,
};
use optograv::params::{
    feasibility_bound, mean_phonon_number, DimensionlessParams, Feasibility, Model, Params, PhysicalParams, Rod,
    Units,
};
use optograv::quadrature::QuadratureSpec;
use optograv::scan::{fmt_num, run_scan, scaling_study, FitOutcome, Provenance};
use optograv::Error;

/// Default number of grid points for traces.
pub const DEFAULT_T_POINTS: usize = 2048;
/// Default trace length in revival periods.
pub const DEFAULT_PERIODS: f64 = 3.0;
/// Fock cutoff tried first by the oracle report.
pub const ORACLE_N_MAX: usize = 30;
/// Coupling used when dimensionless mode runs without a config file.
pub const DEFAULT_BOOSTED_GAMMA: f64 = -1e-2;

pub const TOL_EQUIVALENCE: f64 = 1e-8;
pub const TOL_INTERACTION: f64 = 1e-8;
pub const THERMAL_SIGMAS: f64 = 3.0;

#[derive(Debug, Parser)]
#[command(name = "optograv", version, about = "Gravitationally coupled optomechanical oscillators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived frequencies, couplings and the period shift.
    Derive(Common),
    /// Data behind the visibility and entropy plots.
    Figure(FigureArgs),
    /// Exact-versus-analytic comparison with pass/fail tolerances.
    Oracle(OracleArgs),
    /// Quality factor / temperature frontier.
    Feasibility(Common),
    /// Parameter sweep from the config's `[scan]` section.
    Scan(Common),
    /// Thermal visibility law against a Monte Carlo average.
    Thermal(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Si,
    Dimensionless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Fig2a,
    Fig2b,
    Fig3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Closed,
    Integral,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML parameter file; the built-in reference set when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Unit system; must agree with the config file when both are given.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Clone, Args)]
pub struct TimeGrid {
    /// Grid start in model time units (s in SI mode).
    #[arg(long)]
    pub t_start: Option<f64>,
    /// Grid end; defaults to three revival periods.
    #[arg(long)]
    pub t_stop: Option<f64>,
    #[arg(long)]
    pub t_points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: TimeGrid,
    #[arg(long, value_enum)]
    pub which: Which,
    /// Evaluation of the first-order integral for fig2b.
    #[arg(long, value_enum, default_value = "closed")]
    pub form: Form,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: TimeGrid,
    /// Fock cutoff for both modes.
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(Error::Convergence { .. }) => 3,
            CliError::Model(Error::Fit(_)) | CliError::Tolerance(_) => 2,
            CliError::Model(_) | CliError::Io(_) | CliError::Usage(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Loaded parameters plus the provenance of where they came from.
struct Setup {
    config: Option<RunConfig>,
    params: Params,
    model: Model,
    seed: u64,
    provenance: Provenance,
}

fn setup(c: &Common) -> CliResult<Setup> {
    let config = c.params.as_deref().map(RunConfig::from_file).transpose()?;
    let params = match (&config, c.mode) {
        (Some(cfg), mode) => {
            let units = cfg.params.units();
            if let Some(m) = mode {
                let wanted = match m {
                    Mode::Si => Units::Si,
                    Mode::Dimensionless => Units::Dimensionless,
                };
                if wanted != units {
                    let name = |u: Units| match u {
                        Units::Si => "si",
                        Units::Dimensionless => "dimensionless",
                    };
                    return Err(CliError::Usage(format!(
                        "--mode {} disagrees with the config's units = \"{}\"",
                        name(wanted),
                        name(units)
                    )));
                }
            }
            cfg.params.clone()
        }
        (None, Some(Mode::Dimensionless)) => Params::Dimensionless(DimensionlessParams::boosted(DEFAULT_BOOSTED_GAMMA)),
        (None, _) => Params::Si(PhysicalParams::reference()),
    };
    let model = params.model()?;
    let seed = c.seed.or(config.as_ref().and_then(|cfg| cfg.seed)).unwrap_or(0);
    let provenance = Provenance::new(seed, &params, config.as_ref().map(|cfg| cfg.source_sha256.clone()));
    Ok(Setup {
        config,
        params,
        model,
        seed,
        provenance,
    })
}

fn time_grid(g: &TimeGrid, model: &Model, default_periods: f64, default_points: usize) -> CliResult<Vec<f64>> {
    let start = g.t_start.unwrap_or(0.0);
    let stop = g.t_stop.unwrap_or(default_periods * model.period());
    let n = g.t_points.unwrap_or(default_points);
    if n < 2 || !(start.is_finite() && stop.is_finite()) || stop <= start || start < 0.0 {
        return Err(Error::TimeGrid(format!(
            "need 0 <= t_start < t_stop and t_points >= 2 (got {start}, {stop}, {n})"
        ))
        .into());
    }
    let times = analytic::linspace(start, stop, n);
    analytic::validate_times(&times)?;
    Ok(times)
}

/// Sink that is either a file or stdout.
fn open_out(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &Option<PathBuf>, value: &Value) -> CliResult<()> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes `#` provenance lines, a header and rows.
fn write_csv(out: &Option<PathBuf>, prov: &Provenance, extra: &[String], header: &str, rows: &[String]) -> CliResult<()> {
    let mut w = open_out(out)?;
    for line in prov.comment_lines().iter().chain(extra) {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn prov_json(p: &Provenance) -> Value {
    serde_json::to_value(p).expect("provenance serializes")
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Derive(c) => cmd_derive(&c),
        Command::Figure(a) => cmd_figure(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Feasibility(c) => cmd_feasibility(&c),
        Command::Scan(c) => cmd_scan(&c),
        Command::Thermal(c) => cmd_thermal(&c),
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Serialize)]
struct DeriveReport {
    units: Units,
    omega_a: f64,
    omega_b: f64,
    bare_omega_a: f64,
    bare_omega_b: f64,
    lambda_m: f64,
    lambda_M: f64,
    Lambda_m: f64,
    Lambda_M: f64,
    gamma: f64,
    gamma_over_omega_a: f64,
    delta_T: f64,
    delta_T_ns: f64,
    period: f64,
    visibility_minimum: f64,
}

pub fn cmd_derive(c: &Common) -> CliResult<()> {
    let s = setup(c)?;
    let dc = s.model.couplings;
    let r = DeriveReport {
        units: s.model.units,
        omega_a: dc.omega_a,
        omega_b: dc.omega_b,
        bare_omega_a: dc.bare_omega_a,
        bare_omega_b: dc.bare_omega_b,
        lambda_m: dc.lambda_m,
        lambda_M: dc.lambda_M,
        Lambda_m: dc.Lambda_m,
        Lambda_M: dc.Lambda_M,
        gamma: dc.gamma,
        gamma_over_omega_a: dc.gamma / dc.omega_a,
        delta_T: dc.delta_T,
        delta_T_ns: dc.delta_T * 1e9,
        period: s.model.period(),
        visibility_minimum: (-2.0 * dc.lambda_m * dc.lambda_m).exp(),
    };
    let value = serde_json::to_value(&r).expect("report serializes");
    match c.format {
        Format::Json => write_json(&c.out, &json!({ "provenance": prov_json(&s.provenance), "couplings": value })),
        Format::Csv => {
            let rows: Vec<String> = value
                .as_object()
                .expect("struct serializes to an object")
                .iter()
                .map(|(k, v)| match v.as_f64() {
                    Some(x) => format!("{k},{}", fmt_num(x)),
                    None => format!("{k},{}", v.as_str().unwrap_or_default()),
                })
                .collect();
            write_csv(&c.out, &s.provenance, &[], "quantity,value", &rows)
        }
    }
}

fn emit_trace(c: &Common, s: &Setup, trace: &VisibilityTrace, label: &str) -> CliResult<()> {
    match c.format {
        Format::Json => write_json(
            &c.out,
            &json!({ "provenance": prov_json(&s.provenance), "figure": label, "trace": trace.to_json() }),
        ),
        Format::Csv => {
            let mut w = open_out(&c.out)?;
            for line in s.provenance.comment_lines() {
                writeln!(w, "{line}")?;
            }
            writeln!(w, "# figure {label}")?;
            trace.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

/// Entropy trace on a time axis measured in revival periods.
#[derive(Debug, Serialize)]
struct EntropyTrace {
    t_periods: Vec<f64>,
    values: Vec<f64>,
    local_inclusive: Vec<f64>,
    n_max_a: usize,
    n_max_b: usize,
    method: &'static str,
    params_fingerprint: String,
}

pub fn cmd_figure(a: &FigureArgs) -> CliResult<()> {
    let c = &a.common;
    let s = setup(c)?;
    let times = time_grid(&a.grid, &s.model, DEFAULT_PERIODS, DEFAULT_T_POINTS)?;
    let form = match a.form {
        Form::Closed => FirstOrderForm::Closed,
        Form::Integral => FirstOrderForm::Integral,
    };
    match a.which {
        Which::Fig2a => emit_trace(c, &s, &analytic::visibility_uncoupled(&s.model, Rod::A, &times)?, "fig2a"),
        Which::Fig2b => emit_trace(c, &s, &analytic::visibility_shift(&s.model, &times, form)?, "fig2b"),
        Which::Fig3 => {
            let spec = HilbertSpec::for_model(&s.model)?;
            let quad = QuadratureSpec::default();
            let mut values = Vec::with_capacity(times.len());
            let mut local = Vec::with_capacity(times.len());
            for t in &times {
                let e = analytic::linear_entropy_first_order(&s.model, spec, *t, &quad)?;
                values.push(e.value);
                local.push(e.local_inclusive);
            }
            let period = s.model.period();
            let tr = EntropyTrace {
                t_periods: times.iter().map(|t| t / period).collect(),
                values,
                local_inclusive: local,
                n_max_a: spec.n_max_a,
                n_max_b: spec.n_max_b,
                method: "entropy_second_order",
                params_fingerprint: s.model.fingerprint(),
            };
            match c.format {
                Format::Json => write_json(
                    &c.out,
                    &json!({ "provenance": prov_json(&s.provenance), "figure": "fig3", "trace": tr }),
                ),
                Format::Csv => {
                    let rows: Vec<String> = (0..times.len())
                        .map(|i| {
                            format!(
                                "{},{},{},{}",
                                fmt_num(tr.t_periods[i]),
                                fmt_num(tr.values[i]),
                                fmt_num(tr.local_inclusive[i]),
                                tr.method
                            )
                        })
                        .collect();
                    let extra = [
                        "# figure fig3".to_string(),
                        format!("# period {}", fmt_num(period)),
                        format!("# n_max {} {}", spec.n_max_a, spec.n_max_b),
                    ];
                    write_csv(&c.out, &s.provenance, &extra, "t_periods,value,local_inclusive,method", &rows)
                }
            }
        }
    }
}

/// One measured-versus-allowed line of the oracle report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Upper bound, or lower bound when `kind` is `at_least`.
    pub allowed: f64,
    pub kind: &'static str,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, measured: f64, allowed: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            allowed,
            kind: "at_most",
            passed: measured <= allowed,
        }
    }

    fn at_least(name: &str, measured: f64, allowed: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            allowed,
            kind: "at_least",
            passed: measured >= allowed,
        }
    }
}

fn oracle_spec(model: &Model, n_max: Option<usize>) -> CliResult<HilbertSpec> {
    if let Some(n) = n_max {
        let spec = HilbertSpec::new(n, n)?;
        spec.check_adequacy(model)?;
        return Ok(spec);
    }
    let spec = HilbertSpec::new(ORACLE_N_MAX, ORACLE_N_MAX)?;
    if spec.check_adequacy(model).is_ok() {
        return Ok(spec);
    }
    Ok(HilbertSpec::for_model(model)?)
}

/// Relative coupling ladder of the scaling study.
pub const SCALING_LADDER: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

pub fn cmd_oracle(a: &OracleArgs) -> CliResult<()> {
    let c = &a.common;
    let s = setup(c)?;
    let free = s.model.with_couplings(s.model.couplings.without_gravitational_coupling());
    let spec = oracle_spec(&free, a.n_max)?;
    let times = time_grid(&a.grid, &s.model, 2.0, 65)?;

    let h = build_hamiltonian(&free, spec, HamiltonianKind::Full)?;
    let prop = Propagator::new(&h)?;
    let psi0 = initial_state(&free, spec)?;
    let v0 = analytic::visibility_uncoupled(&free, Rod::A, &times)?;
    let mut worst = 0.0f64;
    for (psi, v) in prop.propagate_many(&psi0, &times).iter().zip(&v0.values) {
        worst = worst.max((visibility_exact(psi, Rod::A)? - v).abs());
    }
    let mut checks = vec![Check::at_most("gamma_zero_visibility", worst, TOL_EQUIVALENCE)];

    let residual = interaction_picture_check(&s.model, spec, s.model.period(), DEFAULT_MARGIN);
    checks.push(Check::at_most("interaction_picture_residual", residual.relative, TOL_INTERACTION));

    let mut study = Value::Null;
    if let Params::Dimensionless(base) = &s.params {
        if base.gamma == 0.0 {
            return Err(Error::Fit("scaling study needs a nonzero gamma".into()).into());
        }
        let gammas: Vec<f64> = SCALING_LADDER.iter().map(|k| k * base.gamma).collect();
        let st = scaling_study(base, &gammas, s.model.period(), spec, &QuadratureSpec::with_rel_tol(1e-10))?;
        let slope = |f: &FitOutcome, name: &str| {
            f.slope().ok_or_else(|| CliError::Model(Error::Fit(format!("{name}: {f:?}"))))
        };
        let ss = slope(&st.state_fit, "state residual")?;
        checks.push(Check::at_most("state_residual_slope_deviation", (ss - 2.0).abs(), 0.1));
        checks.push(Check::at_least("visibility_residual_slope", slope(&st.visibility_fit, "visibility residual")?, 1.9));
        checks.push(Check::at_least("entropy_residual_slope", slope(&st.entropy_fit, "entropy residual")?, 2.5));
        study = serde_json::to_value(&st).expect("study serializes");
    }

    match c.format {
        Format::Json => write_json(
            &c.out,
            &json!({
                "provenance": prov_json(&s.provenance),
                "n_max_a": spec.n_max_a,
                "n_max_b": spec.n_max_b,
                "checks": checks,
                "scaling_study": study,
            }),
        )?,
        Format::Csv => {
            let rows: Vec<String> = checks
                .iter()
                .map(|k| format!("{},{},{},{},{}", k.name, fmt_num(k.measured), fmt_num(k.allowed), k.kind, k.passed))
                .collect();
            let extra = [format!("# n_max {} {}", spec.n_max_a, spec.n_max_b)];
            write_csv(&c.out, &s.provenance, &extra, "check,measured,allowed,kind,passed", &rows)?;
        }
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|k| !k.passed)
        .map(|k| format!("{} measured {:e}, allowed {} {:e}", k.name, k.measured, k.kind, k.allowed))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Tolerance(failed.join("; ")))
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Serialize)]
struct FeasibilityRow {
    given: &'static str,
    quality_factor_Q: f64,
    temperature_T: f64,
    nbar: f64,
    revival_width: f64,
    peak_hwhm: f64,
}

#[allow(non_snake_case)]
fn feasibility_row(s: &Setup, given: Feasibility) -> CliResult<FeasibilityRow> {
    let m = &s.model;
    let (Q, T) = match &s.params {
        Params::Si(p) => match (given, feasibility_bound(p, given)?) {
            (Feasibility::Quality(q), t) | (t @ Feasibility::Temperature(_), Feasibility::Quality(q)) => (q, t.value()),
            _ => unreachable!("the bound converts between kinds"),
        },
        Params::Dimensionless(_) => {
            let quantum = m.hbar * m.couplings.omega_a / m.boltzmann;
            match given {
                Feasibility::Quality(q) if q > 0.0 && q.is_finite() => (q, q * quantum),
                Feasibility::Temperature(t) if t >= 0.0 && t.is_finite() => (t / quantum, t),
                _ => return Err(Error::Domain { field: "feasibility".into(), reason: format!("bad value {given:?}") }.into()),
            }
        }
    };
    let nbar = mean_phonon_number(m.couplings.omega_a, T, m.hbar, m.boltzmann)?;
    Ok(FeasibilityRow {
        given: match given {
            Feasibility::Quality(_) => "quality",
            Feasibility::Temperature(_) => "temperature",
        },
        quality_factor_Q: Q,
        temperature_T: T,
        nbar,
        revival_width: analytic::revival_peak_width(m, T)?,
        peak_hwhm: analytic::thermal_peak_hwhm(m, nbar),
    })
}

pub fn cmd_feasibility(c: &Common) -> CliResult<()> {
    let s = setup(c)?;
    let section = s.config.as_ref().map(|cfg| cfg.feasibility.clone()).unwrap_or_default();
    let mut rows = Vec::new();
    for t in &section.temperatures {
        rows.push(feasibility_row(&s, Feasibility::Temperature(*t))?);
    }
    for q in &section.qualities {
        rows.push(feasibility_row(&s, Feasibility::Quality(*q))?);
    }
    match c.format {
        Format::Json => write_json(&c.out, &json!({ "provenance": prov_json(&s.provenance), "rows": rows })),
        Format::Csv => {
            let lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{},{}",
                        r.given,
                        fmt_num(r.quality_factor_Q),
                        fmt_num(r.temperature_T),
                        fmt_num(r.nbar),
                        fmt_num(r.revival_width),
                        fmt_num(r.peak_hwhm)
                    )
                })
                .collect();
            write_csv(
                &c.out,
                &s.provenance,
                &[],
                "given,quality_factor_Q,temperature_T,nbar,revival_width,peak_hwhm",
                &lines,
            )
        }
    }
}

pub fn cmd_scan(c: &Common) -> CliResult<()> {
    let s = setup(c)?;
    let mut plan = s
        .config
        .as_ref()
        .and_then(|cfg| cfg.scan.clone())
        .ok_or_else(|| CliError::Usage("scan needs --params with a [scan] section".into()))?;
    plan.seed = s.seed;
    let result = run_scan(&plan, Some(s.config.as_ref().expect("checked above").source_sha256.clone()))?;
    match c.format {
        Format::Json => write_json(&c.out, &result.to_json()),
        Format::Csv => {
            let mut w = open_out(&c.out)?;
            result.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct ThermalRow {
    nbar: f64,
    t: f64,
    closed_form: f64,
    montecarlo_mean: f64,
    montecarlo_std_error: f64,
    n_samples: usize,
    passed: bool,
}

pub fn cmd_thermal(c: &Common) -> CliResult<()> {
    let s = setup(c)?;
    let section = s.config.as_ref().map(|cfg| cfg.thermal.clone()).unwrap_or_default();
    if section.t_points == 0 {
        return Err(Error::TimeGrid("thermal t_points must be positive".into()).into());
    }
    let period = s.model.period();
    // Midpoints of one period avoid t = 0 where both sides are exactly 1.
    let times: Vec<f64> = (0..section.t_points)
        .map(|k| (k as f64 + 0.5) / section.t_points as f64 * period)
        .collect();
    let mut rows = Vec::new();
    for nbar in &section.nbar {
        let closed = analytic::thermal_visibility(&s.model, *nbar, &times)?;
        for (t, v) in times.iter().zip(&closed.values) {
            let mc = thermal_visibility_montecarlo(&s.model, *nbar, *t, section.n_samples, s.seed, SamplePath::ClosedForm)?;
            let diff = (mc.mean - v).abs();
            rows.push(ThermalRow {
                nbar: *nbar,
                t: *t,
                closed_form: *v,
                montecarlo_mean: mc.mean,
                montecarlo_std_error: mc.std_error,
                n_samples: mc.n_samples,
                passed: diff <= THERMAL_SIGMAS * mc.std_error || diff < 1e-12,
            });
        }
    }
    match c.format {
        Format::Json => write_json(&c.out, &json!({ "provenance": prov_json(&s.provenance), "rows": rows }))?,
        Format::Csv => {
            let lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{},{},{}",
                        fmt_num(r.nbar),
                        fmt_num(r.t),
                        fmt_num(r.closed_form),
                        fmt_num(r.montecarlo_mean),
                        fmt_num(r.montecarlo_std_error),
                        r.n_samples,
                        r.passed
                    )
                })
                .collect();
            write_csv(
                &c.out,
                &s.provenance,
                &[],
                "nbar,t,closed_form,montecarlo_mean,montecarlo_std_error,n_samples,passed",
                &lines,
            )?;
        }
    }
    let bad = rows.iter().filter(|r| !r.passed).count();
    if bad == 0 {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!(
            "{bad} of {} thermal points differ by more than {THERMAL_SIGMAS} standard errors",
            rows.len()
        )))
    }
}
