//! Physical constants (CODATA 2018) and the reference parameter set.

/// Newtonian constant of gravitation, m³ kg⁻¹ s⁻².
pub const GRAVITATIONAL_CONSTANT: f64 = 6.674_30e-11;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J K⁻¹ (exact since the 2019 SI redefinition).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Reference experiment: two rods carrying 1e-13 kg end masses, 10 nm apart,
/// 3 krad/s torsion frequency with a 0.9 frequency ratio, 10 cm cavities
/// driven at 450e12 rad/s and oscillators prepared in |β = 1⟩.
pub mod reference {
    pub const MASS: f64 = 1e-13;
    pub const SEPARATION: f64 = 1e-8;
    pub const BARE_FREQ_A: f64 = 3e3;
    pub const FREQ_RATIO: f64 = 0.9;
    pub const LIGHT_FREQ: f64 = 450e12;
    pub const CAVITY_LENGTH: f64 = 0.1;
    pub const BETA: f64 = 1.0;
}
