//! Visibility of the rod-A (or rod-B) photon in closed and first-order form.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{Model, Rod};
use crate::quadrature::{integrate, QuadratureSpec};

/// Entries may exceed 1 by this much before a trace is flagged.
pub const UNIT_BOUND_SLACK: f64 = 1e-9;

/// Below this `|ω_a − ω_b|/ω_a` the closed first-order form is refused.
pub const DEGENERATE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Uncoupled,
    FirstOrderClosed,
    FirstOrderIntegral,
    FirstOrderShift,
    OracleExact,
    ThermalClosed,
    ThermalMontecarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uncoupled => "uncoupled",
            Method::FirstOrderClosed => "first_order_closed",
            Method::FirstOrderIntegral => "first_order_integral",
            Method::FirstOrderShift => "first_order_shift",
            Method::OracleExact => "oracle_exact",
            Method::ThermalClosed => "thermal_closed",
            Method::ThermalMontecarlo => "thermal_montecarlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisibilityTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub method: Method,
    pub params_fingerprint: String,
    /// Indices whose value leaves `[0, 1 + 1e-9]`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub out_of_bounds: Vec<usize>,
}

impl VisibilityTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>, method: Method, model: &Model) -> Self {
        let out_of_bounds = if method == Method::FirstOrderShift {
            Vec::new()
        } else {
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| !(**v >= 0.0 && **v <= 1.0 + UNIT_BOUND_SLACK))
                .map(|(i, _)| i)
                .collect()
        };
        VisibilityTrace {
            times,
            values,
            method,
            params_fingerprint: model.fingerprint(),
            out_of_bounds,
        }
    }

    /// CSV with header `t_seconds,value,method`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_seconds,value,method")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t:e},{v:e},{}", self.method.as_str())?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("trace serializes")
    }
}

/// Checks that `times` is non-empty, finite, non-negative and strictly
/// increasing.
pub fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::TimeGrid("no time points".into()));
    }
    for (i, t) in times.iter().enumerate() {
        if !t.is_finite() || *t < 0.0 {
            return Err(Error::TimeGrid(format!("time {i} is {t}; times must be finite and non-negative")));
        }
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::TimeGrid(format!("times not strictly increasing at index {}", i + 1)));
    }
    Ok(())
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|i| if i == n - 1 { stop } else { start + (stop - start) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn uncoupled_value(lambda: f64, omega: f64, t: f64) -> f64 {
    (-(lambda * lambda) * (1.0 - (omega * t).cos())).exp()
}

/// `e^{−λ²(1 − cos ωt)}` with the model's `(λ, ω)` for `rod`.
pub fn visibility_uncoupled(model: &Model, rod: Rod, times: &[f64]) -> Result<VisibilityTrace> {
    validate_times(times)?;
    let (l, w) = (model.couplings.lambda(rod), model.couplings.omega(rod));
    let values = times.iter().map(|t| uncoupled_value(l, w, *t)).collect();
    Ok(VisibilityTrace::new(times.to_vec(), values, Method::Uncoupled, model))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstOrderForm {
    Closed,
    Integral,
}

/// `∫₀ᵗ (1 − cos ω_a(t′ − t)) (2β_M cos ω_b t′ + λ_M(1 − cos ω_b t′)) dt′`,
/// evaluated in closed form. Needs real `β_M` and `ω_a ≠ ω_b`.
pub fn first_order_integral_closed(model: &Model, t: f64) -> Result<f64> {
    let dc = &model.couplings;
    let (wa, wb, lm) = (dc.omega_a, dc.omega_b, dc.lambda_M);
    let gap = (wa - wb).abs() / wa;
    if gap < DEGENERATE_GAP {
        return Err(Error::DegenerateFrequencies { relative_gap: gap });
    }
    if model.beta_M.im != 0.0 {
        return Err(Error::ComplexAmplitude { imag: model.beta_M.im });
    }
    let b = model.beta_M.re;
    let (sa, sb) = ((wa * t).sin(), (wb * t).sin());
    Ok((2.0 * b - lm) * (sb / wb - (wa * sa - wb * sb) / (wa * wa - wb * wb)) + lm * (t - sa / wa))
}

/// The same integral by Gauss–Legendre quadrature. Complex `β_M` enters as
/// `2 Re(β_M e^{−iω_b t′})`.
pub fn first_order_integral_quadrature(model: &Model, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let dc = model.couplings;
    let beta = model.beta_M;
    let f = move |tp: f64| {
        let drive = 2.0 * (beta * Complex64::from_polar(1.0, -dc.omega_b * tp)).re
            + dc.lambda_M * (1.0 - (dc.omega_b * tp).cos());
        (1.0 - (dc.omega_a * (tp - t)).cos()) * drive
    };
    let scale = t * (2.0 * beta.norm() + 2.0 * dc.lambda_M.abs() + 1.0);
    let spec = QuadratureSpec {
        abs_tol: quad.abs_tol.max(1e-15 * scale),
        ..*quad
    };
    Ok(integrate(&spec, "first-order visibility integral", 0.0, t, f)?.value)
}

/// Quadrature policy for the integral form: tight enough to serve as the
/// reference for the closed form.
pub fn integral_form_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        initial_nodes: 16,
        max_nodes: 1 << 16,
        rel_tol: 1e-13,
        abs_tol: 0.0,
    }
}

/// First-order coupled visibility of the rod-A photon,
/// `V₀(t) |1 + 2iγλ_m I(t)|` with `(λ_m, ω_a)` the coupled constants.
pub fn visibility_first_order(model: &Model, times: &[f64], form: FirstOrderForm) -> Result<VisibilityTrace> {
    validate_times(times)?;
    let dc = &model.couplings;
    let quad = integral_form_quadrature();
    let values: Result<Vec<f64>> = times
        .par_iter()
        .map(|t| {
            let integral = match form {
                FirstOrderForm::Closed => first_order_integral_closed(model, *t)?,
                FirstOrderForm::Integral => first_order_integral_quadrature(model, *t, &quad)?,
            };
            let v0 = uncoupled_value(dc.lambda_m, dc.omega_a, *t);
            Ok(v0 * Complex64::new(1.0, 2.0 * dc.gamma * dc.lambda_m * integral).norm())
        })
        .collect();
    let method = match form {
        FirstOrderForm::Closed => Method::FirstOrderClosed,
        FirstOrderForm::Integral => Method::FirstOrderIntegral,
    };
    Ok(VisibilityTrace::new(times.to_vec(), values?, method, model))
}

/// Shift `V₁ − V₀` caused by gravity: the first-order coupled visibility
/// minus the visibility of the same rod with gravity removed, that is with
/// the bare frequency `Ω_a` and uncoupled constant `Λ_m`.
///
/// The shift therefore carries both the frequency change and the coupled
/// dynamics. In dimensionless mode the two sets of constants coincide and
/// only the coupled dynamics remain.
pub fn visibility_shift(model: &Model, times: &[f64], form: FirstOrderForm) -> Result<VisibilityTrace> {
    let v1 = visibility_first_order(model, times, form)?;
    let dc = model.couplings;
    let values = v1
        .values
        .iter()
        .zip(times)
        .map(|(v, t)| v - uncoupled_value(dc.Lambda_m, dc.bare_omega_a, *t))
        .collect();
    Ok(VisibilityTrace::new(times.to_vec(), values, Method::FirstOrderShift, model))
}

/// Visibility of the rod-A photon when its oscillator starts in a thermal
/// mixture with mean occupation `nbar`: `e^{−λ_m²(2n̄+1)(1 − cos ω_a t)}`.
pub fn thermal_visibility(model: &Model, nbar: f64, times: &[f64]) -> Result<VisibilityTrace> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::domain("nbar", format!("must be finite and non-negative, got {nbar}")));
    }
    validate_times(times)?;
    let dc = &model.couplings;
    let l2 = dc.lambda_m * dc.lambda_m;
    let values = times
        .iter()
        .map(|t| (-l2 * (2.0 * nbar + 1.0) * (1.0 - (dc.omega_a * t).cos())).exp())
        .collect();
    Ok(VisibilityTrace::new(times.to_vec(), values, Method::ThermalClosed, model))
}

/// Scaling estimate `1/(λ_m sqrt(4k_BT/(ħω_a) + 2))` of the revived peak's
/// width, in radians of `ω_a t`. Not an exact width.
pub fn revival_peak_width(model: &Model, temperature: f64) -> Result<f64> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::domain("temperature_T", format!("must be finite and non-negative, got {temperature}")));
    }
    let dc = &model.couplings;
    let x = 4.0 * model.boltzmann * temperature / (model.hbar * dc.omega_a);
    Ok(1.0 / (dc.lambda_m * (x + 2.0).sqrt()))
}

/// Half width at half maximum, in radians of `ω_a t`, of the thermal peak
/// around a revival. The half level sits midway between the peak value 1
/// and the trough `e^{−2λ_m²(2n̄+1)}`.
pub fn thermal_peak_hwhm(model: &Model, nbar: f64) -> f64 {
    let k = model.couplings.lambda_m.powi(2) * (2.0 * nbar + 1.0);
    let half = 0.5 * (1.0 + (-2.0 * k).exp());
    // k(1 − cos θ) = −ln(half)
    (1.0 - (-half.ln()) / k).clamp(-1.0, 1.0).acos()
}
