//! Exact uncoupled dynamics of one rod, photon and oscillator.
//!
//! Starting from `(|0,1⟩|β⟩ + |1,0⟩|β⟩)/√2`, the branch with the photon
//! outside the cavity rotates freely, `Φ₀ = βe^{−iωt}`, while the branch
//! with the photon inside is displaced and picks up a phase:
//! `Φ₁ = Φ₀ + λ(1 − e^{−iωt})`, `φ = λ²(ωt − sin ωt) + λ Im[β(1 − e^{−iωt})]`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::oracle::hilbert::{coherent_state, HilbertSpec, StateVector};
use crate::params::{Model, Rod};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherentTrajectory {
    pub phi0: Complex64,
    pub phi1: Complex64,
    pub phase: f64,
    pub rod_label: Rod,
}

/// Trajectory for initial amplitude `beta` under frequency `omega` and
/// coupling `lambda`.
pub fn trajectory(beta: Complex64, omega: f64, lambda: f64, t: f64, rod: Rod) -> CoherentTrajectory {
    let rot = Complex64::from_polar(1.0, -omega * t);
    let alpha = Complex64::new(1.0, 0.0) - rot;
    let phi0 = beta * rot;
    CoherentTrajectory {
        phi0,
        phi1: phi0 + lambda * alpha,
        phase: lambda * lambda * (omega * t - (omega * t).sin()) + lambda * (beta * alpha).im,
        rod_label: rod,
    }
}

/// Trajectory of `rod` using the model's couplings and amplitude.
///
/// Passing a model built from [`crate::params::DerivedCouplings::uncoupled`]
/// gives the gravity-free constants.
pub fn coherent_trajectories(model: &Model, rod: Rod, t: f64) -> CoherentTrajectory {
    let dc = &model.couplings;
    trajectory(model.beta(rod), dc.omega(rod), dc.lambda(rod), t, rod)
}

/// `⟨a|b⟩` for coherent states, written to stay accurate for large
/// amplitudes: `exp(−|a − b|²/2 + i Im(a* b))`.
pub fn coherent_overlap(a: Complex64, b: Complex64) -> Complex64 {
    let d = a - b;
    Complex64::from_polar((-0.5 * d.norm_sqr()).exp(), (a.conj() * b).im)
}

/// Photon off-diagonal `⟨0,1|ρ|1,0⟩ = ½ e^{−iφ} ⟨Φ₁|Φ₀⟩` for initial
/// amplitude `beta`, without gravitational coupling.
pub fn photon_coherence_closed(model: &Model, rod: Rod, beta: Complex64, t: f64) -> Complex64 {
    let dc = &model.couplings;
    let tr = trajectory(beta, dc.omega(rod), dc.lambda(rod), t, rod);
    0.5 * Complex64::from_polar(1.0, -tr.phase) * coherent_overlap(tr.phi1, tr.phi0)
}

/// Rod state `(|0,1⟩|Φ₀⟩ + e^{iφ}|1,0⟩|Φ₁⟩)/√2` on `levels` Fock levels,
/// indexed `path · levels + n`.
fn rod_state(tr: &CoherentTrajectory, levels: usize) -> nalgebra::DVector<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let outside = coherent_state(tr.phi0, levels) * Complex64::new(s, 0.0);
    let inside = coherent_state(tr.phi1, levels) * Complex64::from_polar(s, tr.phase);
    let mut v = nalgebra::DVector::zeros(2 * levels);
    v.rows_mut(0, levels).copy_from(&outside);
    v.rows_mut(levels, levels).copy_from(&inside);
    v
}

/// The freely evolved four-subsystem state at time `t` (no gravitational
/// coupling), built from the closed-form trajectories.
pub fn free_state(model: &Model, spec: HilbertSpec, t: f64) -> Result<StateVector> {
    spec.check_adequacy(model)?;
    let a = coherent_trajectories(model, Rod::A, t);
    let b = coherent_trajectories(model, Rod::B, t);
    Ok(StateVector::bipartite(
        spec,
        &rod_state(&a, spec.levels_a()),
        &rod_state(&b, spec.levels_b()),
        t,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Params, PhysicalParams};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn reference_model() -> Model {
        Params::Si(PhysicalParams::reference()).model().unwrap()
    }

    #[test]
    fn initial_condition() {
        let tr = coherent_trajectories(&reference_model(), Rod::A, 0.0);
        assert_eq!(tr.phi0, Complex64::new(1.0, 0.0));
        assert_eq!(tr.phi1, tr.phi0);
        assert_eq!(tr.phase, 0.0);
    }

    #[test]
    fn full_revival_leaves_kerr_phase() {
        let m = reference_model();
        let l = m.couplings.lambda_m;
        let tr = coherent_trajectories(&m, Rod::A, 2.0 * PI / m.couplings.omega_a);
        assert_relative_eq!(tr.phi0.re, 1.0, epsilon = 1e-12);
        assert!((tr.phi1 - tr.phi0).norm() < 1e-12);
        assert_relative_eq!(tr.phase, 2.0 * PI * l * l, max_relative = 1e-12);
    }

    #[test]
    fn half_period_displacement() {
        let m = reference_model();
        let tr = coherent_trajectories(&m, Rod::A, PI / m.couplings.omega_a);
        let d = tr.phi1 - tr.phi0;
        assert_relative_eq!(d.re, 2.0 * m.couplings.lambda_m, max_relative = 1e-12);
        assert_relative_eq!(d.re, 0.889341319705056, max_relative = 1e-12);
        assert!(d.im.abs() < 1e-12);
    }

    #[test]
    fn overlap_matches_direct_formula() {
        let a = Complex64::new(0.3, -0.7);
        let b = Complex64::new(-0.2, 0.4);
        let direct = (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp();
        assert!((coherent_overlap(a, b) - direct).norm() < 1e-15);
    }

    #[test]
    fn amplitude_preserved() {
        let m = reference_model();
        for k in 0..50 {
            let t = k as f64 * 1.7e-4;
            let tr = coherent_trajectories(&m, Rod::B, t);
            assert_relative_eq!(tr.phi0.norm(), 1.0, max_relative = 1e-14);
            assert!((tr.phi1 - tr.phi0).norm() <= 2.0 * m.couplings.lambda_M + 1e-12);
        }
    }

    #[test]
    fn free_state_is_normalized() {
        let m = reference_model();
        let spec = HilbertSpec::for_model(&m).unwrap();
        let psi = free_state(&m, spec, 1.234e-3).unwrap();
        assert_relative_eq!(psi.norm(), 1.0, epsilon = 1e-12);
    }
}
