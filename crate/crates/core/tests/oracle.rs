use std::f64::consts::PI;

use num_complex::Complex64;

use optograv::analytic::{coherent_trajectories, photon_coherence_closed, thermal_visibility, visibility_uncoupled};
use optograv::oracle::{
    build_hamiltonian, initial_state, photon_coherence, reduce, thermal_visibility_montecarlo, visibility_exact,
    HamiltonianKind, HilbertSpec, LocalOp, Propagator, SamplePath, StateVector, Subsystem,
};
use optograv::params::{DimensionlessParams, Model, Params, PhysicalParams, Rod};
use optograv::scan::convergence_audit;

fn free_reference() -> Model {
    let m = Params::Si(PhysicalParams::reference()).model().unwrap();
    m.with_couplings(m.couplings.without_gravitational_coupling())
}

fn boosted(gamma: f64) -> Model {
    Params::Dimensionless(DimensionlessParams::boosted(gamma)).model().unwrap()
}

fn evolve(model: &Model, spec: HilbertSpec, times: &[f64]) -> Vec<StateVector> {
    let h = build_hamiltonian(model, spec, HamiltonianKind::Full).unwrap();
    let psi0 = initial_state(model, spec).unwrap();
    Propagator::new(&h).unwrap().propagate_many(&psi0, times)
}

/// `⟨a⟩` of rod A conditioned on the photon path (`inside` or not).
fn conditional_amplitude(psi: &StateVector, inside: bool) -> Complex64 {
    let lowered = psi.apply(LocalOp::Lower(Rod::A));
    let in_lowered = lowered.apply(LocalOp::InCavity(Rod::A));
    let p_in = psi.inner(&psi.apply(LocalOp::InCavity(Rod::A))).re;
    if inside {
        psi.inner(&in_lowered) / p_in
    } else {
        (psi.inner(&lowered) - psi.inner(&in_lowered)) / (1.0 - p_in)
    }
}

#[test]
fn free_evolution_matches_closed_trajectories() {
    let m = free_reference();
    let spec = HilbertSpec::new(30, 30).unwrap();
    let period = m.period();
    let times: Vec<f64> = (1..=8).map(|k| k as f64 * period / 6.0).collect();
    for (t, psi) in times.iter().zip(evolve(&m, spec, &times)) {
        let tr = coherent_trajectories(&m, Rod::A, *t);
        let phi0 = conditional_amplitude(&psi, false);
        let phi1 = conditional_amplitude(&psi, true);
        assert!((phi0 - tr.phi0).norm() < 1e-8, "t = {t}: {phi0} vs {}", tr.phi0);
        assert!((phi1 - tr.phi1).norm() < 1e-8, "t = {t}: {phi1} vs {}", tr.phi1);
        let coherence = photon_coherence(&psi, Rod::A);
        let expected = photon_coherence_closed(&m, Rod::A, m.beta_m, *t);
        assert!((coherence - expected).norm() < 1e-8, "t = {t}: {coherence} vs {expected}");
    }
}

#[test]
fn photon_purity_follows_visibility() {
    let m = free_reference();
    let spec = HilbertSpec::new(30, 30).unwrap();
    let t = PI / m.couplings.omega_a;
    let psi = &evolve(&m, spec, &[t])[0];
    let v0 = visibility_uncoupled(&m, Rod::A, &[t]).unwrap().values[0];
    let rho = reduce(psi, &[Subsystem::PhotonC]).unwrap();
    assert!((rho.purity() - 0.5 * (1.0 + v0 * v0)).abs() < 1e-10);
    assert!((visibility_exact(psi, Rod::A).unwrap() - v0).abs() < 1e-10);
}

#[test]
fn gravity_lowers_the_revival() {
    let spec = HilbertSpec::new(26, 26).unwrap();
    let drops: Vec<f64> = [0.0, -2.5e-3, -5e-3, -1e-2]
        .iter()
        .map(|g| {
            let m = boosted(*g);
            let psi = &evolve(&m, spec, &[m.period()])[0];
            1.0 - visibility_exact(psi, Rod::A).unwrap()
        })
        .collect();
    assert!(drops[0].abs() < 1e-10, "{drops:?}");
    for w in drops.windows(2) {
        assert!(w[1] > w[0], "{drops:?}");
    }
}

#[test]
fn truncation_ladder_converges() {
    let m = boosted(-1e-2);
    let times = [0.5 * m.period(), m.period(), 2.0 * m.period()];
    let report = convergence_audit(&m, &[24, 32, 40], &times).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(report.max_visibility_delta < 1e-9);
    assert!(report.entropy_relative_delta < 1e-8);
}

#[test]
fn thermal_average_at_half_period() {
    let m = Params::Si(PhysicalParams::reference()).model().unwrap();
    let t = PI / m.couplings.omega_a;
    let law = thermal_visibility(&m, 1.0, &[t]).unwrap().values[0];
    let expected = (-6.0 * m.couplings.lambda_m.powi(2)).exp();
    assert!((law - expected).abs() < 1e-12);
    let mc = thermal_visibility_montecarlo(&m, 1.0, t, 10_000, 3, SamplePath::ClosedForm).unwrap();
    assert!((mc.mean - law).abs() < 3.0 * mc.std_error, "{mc:?} vs {law}");

    let doubled = thermal_visibility_montecarlo(&m, 1.0, t, 20_000, 3, SamplePath::ClosedForm).unwrap();
    let ratio = mc.std_error / doubled.std_error;
    assert!((ratio - 2f64.sqrt()).abs() < 0.25, "{ratio}");
}
