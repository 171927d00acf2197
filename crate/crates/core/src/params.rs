//! Physical parameters, derived couplings and feasibility estimates.
//!
//! Two unit systems are supported. In SI mode every coupling is computed from
//! the experiment's geometry and masses. In dimensionless mode `ħ = 1`,
//! `ω_a = 1` by default and the gravitational coupling `γ` is specified
//! directly, which is what the numerical scaling studies need: at laboratory
//! parameters `γ/ω_a ≈ 4e-7`, far below what an exact propagation can resolve.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::{self, reference};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Si,
    Dimensionless,
}

/// How configured frequencies are read. Formulas always use rad/s; a cyclic
/// value is multiplied by 2π on the way in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyConvention {
    #[default]
    Angular,
    Cyclic,
}

impl FrequencyConvention {
    fn to_angular(self, f: f64) -> f64 {
        match self {
            FrequencyConvention::Angular => f,
            FrequencyConvention::Cyclic => TAU * f,
        }
    }
}

/// One of the two rod/cavity/oscillator chains.
///
/// `A` carries the end masses `m`, the mechanical mode `a` and the cavity `c`;
/// `B` carries `M`, mode `b` and cavity `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rod {
    A,
    B,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// End mass on rod A, kg.
    pub mass_m: f64,
    /// End mass on rod B, kg.
    pub mass_M: f64,
    /// Vertical separation between the rods, m.
    pub separation_h: f64,
    /// Cavity length, m.
    pub cavity_length_d: f64,
    pub bare_freq_a: f64,
    pub bare_freq_b: f64,
    pub light_freq_c: f64,
    pub light_freq_d: f64,
    pub beta_m: Complex64,
    pub beta_M: Complex64,
    /// Half the rod length. Only the angular potential needs it; every
    /// coupling is independent of it.
    pub rod_half_length_L: Option<f64>,
    pub grav_constant_G: f64,
    pub hbar: f64,
    #[serde(default)]
    pub frequency_convention: FrequencyConvention,
}

impl PhysicalParams {
    /// The laboratory parameter set used throughout the examples and the book.
    pub fn reference() -> Self {
        PhysicalParams {
            mass_m: reference::MASS,
            mass_M: reference::MASS,
            separation_h: reference::SEPARATION,
            cavity_length_d: reference::CAVITY_LENGTH,
            bare_freq_a: reference::BARE_FREQ_A,
            bare_freq_b: reference::FREQ_RATIO * reference::BARE_FREQ_A,
            light_freq_c: reference::LIGHT_FREQ,
            light_freq_d: reference::LIGHT_FREQ,
            beta_m: Complex64::new(reference::BETA, 0.0),
            beta_M: Complex64::new(reference::BETA, 0.0),
            rod_half_length_L: None,
            grav_constant_G: constants::GRAVITATIONAL_CONSTANT,
            hbar: constants::HBAR,
            frequency_convention: FrequencyConvention::Angular,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_m", self.mass_m),
            ("mass_M", self.mass_M),
            ("separation_h", self.separation_h),
            ("cavity_length_d", self.cavity_length_d),
            ("bare_freq_a", self.bare_freq_a),
            ("bare_freq_b", self.bare_freq_b),
            ("light_freq_c", self.light_freq_c),
            ("light_freq_d", self.light_freq_d),
            ("hbar", self.hbar),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(field, format!("must be finite and > 0, got {v}")));
            }
        }
        if let Some(l) = self.rod_half_length_L {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::domain("rod_half_length_L", format!("must be finite and > 0, got {l}")));
            }
        }
        if !(self.grav_constant_G.is_finite() && self.grav_constant_G >= 0.0) {
            return Err(Error::domain(
                "grav_constant_G",
                format!("must be finite and >= 0, got {}", self.grav_constant_G),
            ));
        }
        check_amplitude("beta_m", self.beta_m)?;
        check_amplitude("beta_M", self.beta_M)
    }

    pub fn bare_omega_a(&self) -> f64 {
        self.frequency_convention.to_angular(self.bare_freq_a)
    }

    pub fn bare_omega_b(&self) -> f64 {
        self.frequency_convention.to_angular(self.bare_freq_b)
    }

    pub fn light_omega_c(&self) -> f64 {
        self.frequency_convention.to_angular(self.light_freq_c)
    }

    pub fn light_omega_d(&self) -> f64 {
        self.frequency_convention.to_angular(self.light_freq_d)
    }
}

fn check_amplitude(field: &str, b: Complex64) -> Result<()> {
    if b.re.is_finite() && b.im.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(field, "coherent amplitude must be finite"))
    }
}

/// Parameters in units where `ħ = 1`. Couplings are given directly.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub lambda_m: f64,
    pub lambda_M: f64,
    pub gamma: f64,
    pub beta_m: Complex64,
    pub beta_M: Complex64,
}

impl DimensionlessParams {
    /// Reference optomechanics (λ ≈ 0.445, frequency ratio 0.9, β = 1) with
    /// the given gravitational coupling in units of `ω_a`.
    pub fn boosted(gamma: f64) -> Self {
        let dc = derive_couplings(&PhysicalParams::reference()).expect("reference parameters are valid");
        DimensionlessParams {
            omega_a: 1.0,
            omega_b: reference::FREQ_RATIO,
            lambda_m: dc.lambda_m,
            lambda_M: dc.lambda_M,
            gamma,
            beta_m: Complex64::new(reference::BETA, 0.0),
            beta_M: Complex64::new(reference::BETA, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("omega_a", self.omega_a), ("omega_b", self.omega_b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(field, format!("must be finite and > 0, got {v}")));
            }
        }
        for (field, v) in [("lambda_m", self.lambda_m), ("lambda_M", self.lambda_M)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !self.gamma.is_finite() {
            return Err(Error::domain("gamma", format!("must be finite, got {}", self.gamma)));
        }
        check_amplitude("beta_m", self.beta_m)?;
        check_amplitude("beta_M", self.beta_M)
    }
}

/// Parameters in either unit system.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Si(PhysicalParams),
    Dimensionless(DimensionlessParams),
}

impl Params {
    pub fn units(&self) -> Units {
        match self {
            Params::Si(_) => Units::Si,
            Params::Dimensionless(_) => Units::Dimensionless,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Params::Si(p) => p.validate(),
            Params::Dimensionless(p) => p.validate(),
        }
    }

    /// Bundles derived couplings with the initial amplitudes.
    pub fn model(&self) -> Result<Model> {
        match self {
            Params::Si(p) => Ok(Model {
                units: Units::Si,
                couplings: derive_couplings(p)?,
                beta_m: p.beta_m,
                beta_M: p.beta_M,
                hbar: p.hbar,
                boltzmann: constants::BOLTZMANN,
            }),
            Params::Dimensionless(p) => {
                p.validate()?;
                Ok(Model {
                    units: Units::Dimensionless,
                    couplings: DerivedCouplings {
                        omega_a: p.omega_a,
                        omega_b: p.omega_b,
                        bare_omega_a: p.omega_a,
                        bare_omega_b: p.omega_b,
                        lambda_m: p.lambda_m,
                        lambda_M: p.lambda_M,
                        Lambda_m: p.lambda_m,
                        Lambda_M: p.lambda_M,
                        gamma: p.gamma,
                        delta_T: 0.0,
                    },
                    beta_m: p.beta_m,
                    beta_M: p.beta_M,
                    hbar: 1.0,
                    boltzmann: 1.0,
                })
            }
        }
    }
}

/// Quantities derived from [`PhysicalParams`].
///
/// `omega_*`, `lambda_*` and `gamma` enter the gravitationally coupled
/// Hamiltonian; `bare_omega_*` and `Lambda_*` are the corresponding constants
/// of the uncoupled system.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCouplings {
    pub omega_a: f64,
    pub omega_b: f64,
    pub bare_omega_a: f64,
    pub bare_omega_b: f64,
    pub lambda_m: f64,
    pub lambda_M: f64,
    pub Lambda_m: f64,
    pub Lambda_M: f64,
    pub gamma: f64,
    /// Revival-period shift `2π/Ω_a − 2π/ω_a`, s.
    pub delta_T: f64,
}

impl DerivedCouplings {
    pub fn omega(&self, rod: Rod) -> f64 {
        match rod {
            Rod::A => self.omega_a,
            Rod::B => self.omega_b,
        }
    }

    pub fn lambda(&self, rod: Rod) -> f64 {
        match rod {
            Rod::A => self.lambda_m,
            Rod::B => self.lambda_M,
        }
    }

    /// The same system with gravity switched off: bare frequencies and
    /// uncoupled optomechanical constants, `γ = 0`.
    pub fn uncoupled(&self) -> DerivedCouplings {
        DerivedCouplings {
            omega_a: self.bare_omega_a,
            omega_b: self.bare_omega_b,
            lambda_m: self.Lambda_m,
            lambda_M: self.Lambda_M,
            gamma: 0.0,
            delta_T: 0.0,
            ..*self
        }
    }

    /// Keeps the frequencies and optomechanical constants but sets `γ = 0`.
    pub fn without_gravitational_coupling(&self) -> DerivedCouplings {
        DerivedCouplings { gamma: 0.0, ..*self }
    }
}

/// Optomechanical coupling `ω_light / (2 d ω) · sqrt(ħ / (m ω))`.
fn optomechanical_coupling(light: f64, cavity: f64, omega: f64, mass: f64, hbar: f64) -> f64 {
    light / (2.0 * cavity * omega) * (hbar / (mass * omega)).sqrt()
}

pub fn derive_couplings(p: &PhysicalParams) -> Result<DerivedCouplings> {
    p.validate()?;
    let g = p.grav_constant_G;
    let h3 = p.separation_h.powi(3);
    let bare_a = p.bare_omega_a();
    let bare_b = p.bare_omega_b();

    // Each rod feels a stiffening G·(other mass)/h³ from the quadratic
    // expansion of the attraction.
    let omega_a = (bare_a * bare_a + g * p.mass_M / h3).sqrt();
    let omega_b = (bare_b * bare_b + g * p.mass_m / h3).sqrt();
    let gamma = -g / (2.0 * h3) * (p.mass_M * p.mass_m / (omega_a * omega_b)).sqrt();

    let dc = DerivedCouplings {
        omega_a,
        omega_b,
        bare_omega_a: bare_a,
        bare_omega_b: bare_b,
        lambda_m: optomechanical_coupling(p.light_omega_c(), p.cavity_length_d, omega_a, p.mass_m, p.hbar),
        lambda_M: optomechanical_coupling(p.light_omega_d(), p.cavity_length_d, omega_b, p.mass_M, p.hbar),
        Lambda_m: optomechanical_coupling(p.light_omega_c(), p.cavity_length_d, bare_a, p.mass_m, p.hbar),
        Lambda_M: optomechanical_coupling(p.light_omega_d(), p.cavity_length_d, bare_b, p.mass_M, p.hbar),
        gamma,
        delta_T: TAU / bare_a - TAU / omega_a,
    };

    let fields = [
        ("omega_a", dc.omega_a),
        ("omega_b", dc.omega_b),
        ("lambda_m", dc.lambda_m),
        ("lambda_M", dc.lambda_M),
        ("Lambda_m", dc.Lambda_m),
        ("Lambda_M", dc.Lambda_M),
        ("gamma", dc.gamma),
        ("delta_T", dc.delta_T),
    ];
    for (field, v) in fields {
        if !v.is_finite() {
            return Err(Error::domain(field, "derived value is not finite"));
        }
    }
    Ok(dc)
}

/// Derived couplings plus everything else the dynamics needs: the initial
/// coherent amplitudes and the unit system's `ħ` and `k_B`.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Model {
    pub units: Units,
    pub couplings: DerivedCouplings,
    pub beta_m: Complex64,
    pub beta_M: Complex64,
    pub hbar: f64,
    pub boltzmann: f64,
}

impl Model {
    pub fn beta(&self, rod: Rod) -> Complex64 {
        match rod {
            Rod::A => self.beta_m,
            Rod::B => self.beta_M,
        }
    }

    /// Revival period of rod A's visibility, `2π/ω_a`.
    pub fn period(&self) -> f64 {
        TAU / self.couplings.omega_a
    }

    pub fn with_couplings(&self, couplings: DerivedCouplings) -> Model {
        Model { couplings, ..self.clone() }
    }

    /// Short stable hash of every input that determines the dynamics.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("model serializes");
        let digest = Sha256::digest(&json);
        hex::encode(&digest[..8])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialMode {
    Exact,
    Quadratic,
}

fn rod_length(p: &PhysicalParams) -> Result<f64> {
    p.rod_half_length_L
        .ok_or_else(|| Error::domain("rod_half_length_L", "required for the angular potential"))
}

/// Gravitational energy (J) of the two rods at angles `theta_m`, `theta_M`.
///
/// Exact: `−2GMm / sqrt(h² + (2L sin(Δθ/2))²)`. Quadratic:
/// `−2GMm/h + (GMmL²/h³) Δθ²`.
#[allow(non_snake_case)]
pub fn gravitational_potential(theta_m: f64, theta_M: f64, p: &PhysicalParams, mode: PotentialMode) -> Result<f64> {
    p.validate()?;
    let l = rod_length(p)?;
    let gmm = p.grav_constant_G * p.mass_M * p.mass_m;
    let h = p.separation_h;
    let dtheta = theta_M - theta_m;
    Ok(match mode {
        PotentialMode::Exact => {
            let chord = 2.0 * l * (0.5 * dtheta).sin();
            -2.0 * gmm / (h * h + chord * chord).sqrt()
        }
        PotentialMode::Quadratic => -2.0 * gmm / h + gmm * l * l / h.powi(3) * dtheta * dtheta,
    })
}

/// `(exact − quadratic) / |exact|` for a relative angle `dtheta`, evaluated
/// without the cancellation of subtracting the two energies.
pub fn quadratic_relative_error(dtheta: f64, p: &PhysicalParams) -> Result<f64> {
    p.validate()?;
    let l = rod_length(p)?;
    let h = p.separation_h;
    // exact ∝ −(1+u)^(−1/2), quadratic ∝ −(1 − v/2)
    let u = (2.0 * l * (0.5 * dtheta).sin() / h).powi(2);
    let v = (l * dtheta / h).powi(2);
    let inv_sqrt_minus_one = (-0.5 * u.ln_1p()).exp_m1();
    let scale = (-0.5 * u.ln_1p()).exp();
    Ok(-(inv_sqrt_minus_one + 0.5 * v) / scale)
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalEnv {
    pub temperature_T: f64,
    pub damping_rate_Gamma_a: f64,
    pub nbar: f64,
    pub dephasing_rate_Gamma_D: f64,
    pub position_uncertainty_dx: f64,
    pub quality_factor_Q: f64,
}

/// Bose–Einstein occupation of a mode of angular frequency `omega`.
pub fn mean_phonon_number(omega: f64, temperature: f64, hbar: f64, boltzmann: f64) -> Result<f64> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::domain("temperature_T", format!("must be finite and >= 0, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (hbar * omega / (boltzmann * temperature)).exp_m1())
}

#[allow(non_snake_case)]
pub fn thermal_env(p: &PhysicalParams, temperature: f64, Gamma_a: f64) -> Result<ThermalEnv> {
    let dc = derive_couplings(p)?;
    if !(Gamma_a.is_finite() && Gamma_a > 0.0) {
        return Err(Error::domain("damping_rate_Gamma_a", format!("must be finite and > 0, got {Gamma_a}")));
    }
    let kb = constants::BOLTZMANN;
    let nbar = mean_phonon_number(dc.omega_a, temperature, p.hbar, kb)?;
    let dx = (p.hbar / (p.mass_m * dc.omega_a)).sqrt();
    Ok(ThermalEnv {
        temperature_T: temperature,
        damping_rate_Gamma_a: Gamma_a,
        nbar,
        dephasing_rate_Gamma_D: Gamma_a * kb * temperature * p.mass_m * dx * dx / (p.hbar * p.hbar),
        position_uncertainty_dx: dx,
        quality_factor_Q: dc.omega_a / Gamma_a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    /// Quality factor `Q = ω_a / Γ_a`.
    Quality(f64),
    /// Temperature in kelvin.
    Temperature(f64),
}

/// Threshold of the decoherence criterion `Q ≳ k_B T / (ħ ω_a)`, taken as an
/// equality. Given a quality factor this returns the highest workable
/// temperature; given a temperature, the smallest workable quality factor.
/// The criterion carries no prefactor, so the result is an order-of-magnitude
/// estimate.
pub fn feasibility_bound(p: &PhysicalParams, given: Feasibility) -> Result<Feasibility> {
    let dc = derive_couplings(p)?;
    let quantum = p.hbar * dc.omega_a / constants::BOLTZMANN;
    match given {
        Feasibility::Quality(q) if q.is_finite() && q > 0.0 => Ok(Feasibility::Temperature(q * quantum)),
        Feasibility::Temperature(t) if t.is_finite() && t >= 0.0 => Ok(Feasibility::Quality(t / quantum)),
        Feasibility::Quality(q) => Err(Error::domain("quality_factor_Q", format!("must be > 0, got {q}"))),
        Feasibility::Temperature(t) => Err(Error::domain("temperature_T", format!("must be >= 0, got {t}"))),
    }
}

impl Feasibility {
    pub fn value(self) -> f64 {
        match self {
            Feasibility::Quality(v) | Feasibility::Temperature(v) => v,
        }
    }
}
