//! Linear entropy between the two rods to second order in `γ`.
//!
//! With `U ≈ e^{iγA}` acting on the freely evolved product state
//! `ψ = ψ₁ ⊗ ψ₂`, the reduced state of rod A loses purity only through the
//! part of `Aψ` that changes both factors:
//!
//! `S = 2γ² ‖(Q₁ ⊗ Q₂) A ψ‖²`, `Q_k = 1 − |ψ_k⟩⟨ψ_k|`,
//!
//! which expands to `w = Aψ − (A₁ ⊗ 1)ψ − (1 ⊗ A₂)ψ + ⟨A⟩ψ` with the partial
//! averages `A₁ = ⟨ψ₂|A|ψ₂⟩` and `A₂ = ⟨ψ₁|A|ψ₁⟩`.
//!
//! The form `2γ²(⟨A²⟩ − ⟨ψ₁|A₁²|ψ₁⟩) = 2γ²‖Aψ − (A₁ ⊗ 1)ψ‖²` drops the
//! `A₂` and `⟨A⟩` terms and so also counts local changes of rod B. It is
//! reported as `local_inclusive` for comparison.

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::coherent::free_state;
use crate::error::Result;
use crate::oracle::hilbert::{HilbertSpec, StateVector};
use crate::oracle::interaction::DysonGenerator;
use crate::params::{Model, Rod};
use crate::quadrature::{refine, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub t: f64,
    /// `2γ²‖w‖²`.
    pub value: f64,
    /// `2γ²‖Aψ − (A₁ ⊗ 1)ψ‖²`.
    pub local_inclusive: f64,
    pub nodes: usize,
    pub quadrature_delta: f64,
}

/// Both entropy forms for a generator and the free state it acts on.
pub fn entropy_forms(gen: &DysonGenerator, psi: &StateVector, gamma: f64) -> (f64, f64) {
    let a_psi = gen.apply(psi);
    let a1 = gen.apply_averaged_over(psi, Rod::B);
    let a2 = gen.apply_averaged_over(psi, Rod::A);
    let mean = psi.inner(&a_psi);
    let local = &a_psi.amplitudes - &a1.amplitudes;
    let w = &local - &a2.amplitudes + &psi.amplitudes * mean;
    let g2 = 2.0 * gamma * gamma;
    (g2 * w.norm_squared(), g2 * local.norm_squared())
}

/// Second-order linear entropy of rod A (photon c with mode a) at time `t`.
///
/// The generator's time integral is refined by node doubling until `S`
/// changes by less than `quad.rel_tol` relative.
pub fn linear_entropy_first_order(
    model: &Model,
    spec: HilbertSpec,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<EntropyEstimate> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(crate::error::Error::domain("t", format!("must be finite and non-negative, got {t}")));
    }
    let psi = free_state(model, spec, t)?;
    let gamma = model.couplings.gamma;
    if t == 0.0 || gamma == 0.0 {
        return Ok(EntropyEstimate {
            t,
            value: 0.0,
            local_inclusive: 0.0,
            nodes: 0,
            quadrature_delta: 0.0,
        });
    }
    let refined = refine(
        quad,
        "linear entropy generator",
        |rule| entropy_forms(&DysonGenerator::from_rule(model, t, rule), &psi, gamma),
        |new, old| ((new.0 - old.0).abs(), new.0.abs()),
    )?;
    Ok(EntropyEstimate {
        t,
        value: refined.value.0,
        local_inclusive: refined.value.1,
        nodes: refined.nodes,
        quadrature_delta: refined.delta,
    })
}

/// `⟨ψ|A|ψ⟩` is real for the Hermitian generator; exposed for diagnostics.
pub fn generator_mean(gen: &DysonGenerator, psi: &StateVector) -> Complex64 {
    psi.inner(&gen.apply(psi))
}
