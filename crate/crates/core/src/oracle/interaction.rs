//! Interaction-picture algebra checked against matrices, and the first-order
//! Dyson correction.
//!
//! With `H₀` the Hamiltonian without the gravitational term,
//! `e^{iH₀t/ħ} H_g e^{−iH₀t/ħ} = ħγ X_a(t) X_b(t)` where
//! `X_a(t) = a†e^{iω_a t} + a e^{−iω_a t} + 2λ_m c₁†c₁ (1 − cos ω_a t)`
//! and likewise for `b`. To first order in `γ` the state at time `t` is
//! `ψ(t) ≈ ψ₀(t) + iγ A ψ₀(t)` with `ψ₀(t) = e^{−iH₀t/ħ}ψ(0)` and the
//! Hermitian generator `A = −∫₀ᵗ X_a(t′−t) X_b(t′−t) dt′`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::oracle::hilbert::{HilbertSpec, LocalOp, StateVector};
use crate::params::{Model, Rod};
use crate::quadrature::{refine, GaussLegendre, QuadratureSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Interior margin used by default in [`interaction_picture_check`].
///
/// Truncation damage spreads roughly `2λ√n_max` rungs down from the top of
/// the ladder and keeps decaying over several such widths; at `n_max = 30`
/// and `λ ≈ 0.5` a margin of 20 brings the residual to about `1e-11`.
pub const DEFAULT_MARGIN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionResidual {
    pub t: f64,
    /// `‖P (numeric − closed) P‖_F / ‖P H_g P‖_F`.
    pub relative: f64,
    pub margin: usize,
}

/// `a + a†` on `levels` Fock levels.
fn quadrature(levels: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(levels, levels);
    for n in 0..levels - 1 {
        let s = ((n + 1) as f64).sqrt();
        x[(n, n + 1)] = s;
        x[(n + 1, n)] = s;
    }
    x
}

/// Single-mode Hamiltonian `ω a†a − n λ ω (a + a†)` for photon number `n`.
fn mode_hamiltonian(levels: usize, omega: f64, lambda: f64, photons: f64) -> DMatrix<f64> {
    let mut h = quadrature(levels) * (-photons * lambda * omega);
    for n in 0..levels {
        h[(n, n)] = omega * n as f64;
    }
    h
}

/// `e^{iht} (a + a†) e^{−iht}` evaluated through the eigendecomposition of
/// the truncated `h`.
fn conjugated_quadrature(h: &DMatrix<f64>, t: f64) -> DMatrix<Complex64> {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|e| Complex64::from_polar(1.0, e * t)),
    ));
    let u = &v * phases * v.adjoint();
    let x = quadrature(n).map(|x| Complex64::new(x, 0.0));
    &u * x * u.adjoint()
}

/// `X(t)` in closed form on one mode for photon number `n`.
fn closed_quadrature(levels: usize, omega: f64, lambda: f64, photons: f64, t: f64) -> DMatrix<Complex64> {
    let mut x = DMatrix::zeros(levels, levels);
    let up = Complex64::from_polar(1.0, omega * t);
    for n in 0..levels - 1 {
        let s = ((n + 1) as f64).sqrt();
        x[(n + 1, n)] = up * s;
        x[(n, n + 1)] = up.conj() * s;
    }
    let shift = 2.0 * lambda * photons * (1.0 - (omega * t).cos());
    for n in 0..levels {
        x[(n, n)] += Complex64::new(shift, 0.0);
    }
    x
}

/// Compares the numerically conjugated gravitational term with the closed
/// form `ħγ X_a(t) X_b(t)`, sector by sector in the photon numbers, on the
/// Fock interior `n ≤ n_max − margin` of both modes.
///
/// `H₀` is a Kronecker sum over the two modes within each sector, so the
/// conjugation factorizes and is done on the single-mode matrices. The
/// residual is normalized by `‖P H_g P‖` and is independent of `γ`.
pub fn interaction_picture_check(model: &Model, spec: HilbertSpec, t: f64, margin: usize) -> InteractionResidual {
    let dc = &model.couplings;
    let (la, lb) = (spec.levels_a(), spec.levels_b());
    let (ia, ib) = (la.saturating_sub(margin).max(1), lb.saturating_sub(margin).max(1));
    let interior = |m: DMatrix<Complex64>, k: usize| m.view((0, 0), (k, k)).into_owned();

    let mut diff2 = 0.0;
    let mut ref2 = 0.0;
    let xa_ref = quadrature(la).view((0, 0), (ia, ia)).norm_squared();
    let xb_ref = quadrature(lb).view((0, 0), (ib, ib)).norm_squared();
    for c in [0.0, 1.0] {
        let num_a = interior(conjugated_quadrature(&mode_hamiltonian(la, dc.omega_a, dc.lambda_m, c), t), ia);
        let cl_a = interior(closed_quadrature(la, dc.omega_a, dc.lambda_m, c, t), ia);
        for d in [0.0, 1.0] {
            let num_b = interior(conjugated_quadrature(&mode_hamiltonian(lb, dc.omega_b, dc.lambda_M, d), t), ib);
            let cl_b = interior(closed_quadrature(lb, dc.omega_b, dc.lambda_M, d, t), ib);
            diff2 += kron_difference_norm2(&num_a, &num_b, &cl_a, &cl_b);
            ref2 += xa_ref * xb_ref;
        }
    }
    InteractionResidual {
        t,
        relative: (diff2 / ref2).sqrt(),
        margin,
    }
}

/// `‖A⊗B − C⊗D‖_F²` computed entrywise.
fn kron_difference_norm2(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    c: &DMatrix<Complex64>,
    d: &DMatrix<Complex64>,
) -> f64 {
    let mut acc = 0.0;
    for (ac, cc) in a.iter().zip(c.iter()) {
        for (bd, dd) in b.iter().zip(d.iter()) {
            acc += (ac * bd - cc * dd).norm_sqr();
        }
    }
    acc
}

/// The three operator components of `X_a` (or `X_b`) and their time
/// dependence `s ↦ coefficient`: `a†·e^{iωs}`, `a·e^{−iωs}`,
/// `c₁†c₁·2λ(1 − cos ωs)`.
fn components(model: &Model, rod: Rod, s: f64) -> [Complex64; 3] {
    let omega = model.couplings.omega(rod);
    let lambda = model.couplings.lambda(rod);
    let ph = Complex64::from_polar(1.0, omega * s);
    [ph, ph.conj(), Complex64::new(2.0 * lambda * (1.0 - (omega * s).cos()), 0.0)]
}

fn component_op(rod: Rod, k: usize) -> LocalOp {
    match k {
        0 => LocalOp::Raise(rod),
        1 => LocalOp::Lower(rod),
        _ => LocalOp::InCavity(rod),
    }
}

/// `A = −Σ_{jk} C_{jk} O^a_j O^b_k` with `C_{jk} = ∫₀ᵗ f_j(t′−t) g_k(t′−t) dt′`.
#[derive(Debug, Clone, PartialEq)]
pub struct DysonGenerator {
    pub t: f64,
    pub coefficients: [[Complex64; 3]; 3],
    pub nodes: usize,
    pub quadrature_delta: f64,
}

impl DysonGenerator {
    pub fn new(model: &Model, t: f64, quad: &QuadratureSpec) -> Result<Self> {
        if t == 0.0 {
            return Ok(DysonGenerator::from_rule(model, t, &GaussLegendre::cached(1)));
        }
        let refined = refine(
            quad,
            "Dyson generator coefficients",
            |rule| DysonGenerator::from_rule(model, t, rule),
            |new, old| {
                let mut delta: f64 = 0.0;
                let mut scale: f64 = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        delta = delta.max((new.coefficients[j][k] - old.coefficients[j][k]).norm());
                        scale = scale.max(new.coefficients[j][k].norm());
                    }
                }
                (delta, scale)
            },
        )?;
        Ok(DysonGenerator {
            quadrature_delta: refined.delta,
            ..refined.value
        })
    }

    /// Coefficients from one fixed quadrature rule, without refinement.
    pub fn from_rule(model: &Model, t: f64, rule: &GaussLegendre) -> Self {
        let mut c = [[Complex64::new(0.0, 0.0); 3]; 3];
        if t > 0.0 {
            for (tp, w) in rule.points(0.0, t) {
                let fa = components(model, Rod::A, tp - t);
                let fb = components(model, Rod::B, tp - t);
                for j in 0..3 {
                    for k in 0..3 {
                        c[j][k] += fa[j] * fb[k] * w;
                    }
                }
            }
        }
        DysonGenerator {
            t,
            coefficients: c,
            nodes: if t > 0.0 { rule.len() } else { 0 },
            quadrature_delta: 0.0,
        }
    }

    /// `A ψ`.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let mut out = StateVector::zeros(psi.spec, psi.time);
        for k in 0..3 {
            let ob = psi.apply(component_op(Rod::B, k));
            for j in 0..3 {
                let coeff = self.coefficients[j][k];
                if coeff.norm() == 0.0 {
                    continue;
                }
                let term = ob.apply(component_op(Rod::A, j));
                out.amplitudes.axpy(-coeff, &term.amplitudes, Complex64::new(1.0, 0.0));
            }
        }
        out
    }

    /// `(A₁ ⊗ 1) ψ` with `A₁ = ⟨ψ₂|A|ψ₂⟩`, for a product state `ψ = ψ₁⊗ψ₂`
    /// across the rod-A | rod-B cut.
    pub fn apply_averaged_over(&self, psi: &StateVector, averaged: Rod) -> StateVector {
        let acting = match averaged {
            Rod::A => Rod::B,
            Rod::B => Rod::A,
        };
        let means: Vec<Complex64> = (0..3).map(|k| psi.inner(&psi.apply(component_op(averaged, k)))).collect();
        let mut out = StateVector::zeros(psi.spec, psi.time);
        for j in 0..3 {
            let coeff: Complex64 = means
                .iter()
                .enumerate()
                .map(|(k, m)| match acting {
                    Rod::A => self.coefficients[j][k] * m,
                    Rod::B => self.coefficients[k][j] * m,
                })
                .sum();
            let term = psi.apply(component_op(acting, j));
            out.amplitudes.axpy(-coeff, &term.amplitudes, Complex64::new(1.0, 0.0));
        }
        out
    }
}

/// First-order correction `iγ A ψ₀(t)` to the freely evolved state.
///
/// `free` must be `e^{−iH₀t/ħ}ψ(0)` at `free.time`. Returns the correction
/// together with the generator that produced it.
pub fn dyson_first_order_state(
    model: &Model,
    free: &StateVector,
    quad: &QuadratureSpec,
) -> Result<(StateVector, DysonGenerator)> {
    let gen = DysonGenerator::new(model, free.time, quad)?;
    let mut corr = gen.apply(free);
    corr.amplitudes *= I * model.couplings.gamma;
    Ok((corr, gen))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::hamiltonian::{build_hamiltonian, HamiltonianKind, Propagator};
    use crate::oracle::hilbert::initial_state;
    use crate::params::{DimensionlessParams, Params, PhysicalParams};

    fn boosted(gamma: f64) -> Model {
        Params::Dimensionless(DimensionlessParams::boosted(gamma)).model().unwrap()
    }

    #[test]
    fn residual_vanishes_at_zero_time() {
        let model = boosted(-0.01);
        let spec = HilbertSpec::new(20, 20).unwrap();
        assert!(interaction_picture_check(&model, spec, 0.0, 8).relative < 1e-13);
    }

    #[test]
    fn free_rotation_without_optomechanics() {
        let mut model = boosted(-0.01);
        model.couplings.lambda_m = 0.0;
        model.couplings.lambda_M = 0.0;
        let spec = HilbertSpec::new(20, 20).unwrap();
        for t in [0.4, 3.0, 11.0] {
            assert!(interaction_picture_check(&model, spec, t, 1).relative < 1e-10);
        }
    }

    #[test]
    fn factorized_conjugation_matches_full_sector() {
        // Conjugate H_g by the full two-mode sector Hamiltonian on a small
        // truncation and compare with the per-mode Kronecker product.
        let model = boosted(-0.02);
        let spec = HilbertSpec::new(5, 4).unwrap();
        let h0 = build_hamiltonian(&model, spec, HamiltonianKind::Free).unwrap();
        let t = 2.3;
        let (la, lb) = (spec.levels_a(), spec.levels_b());
        let xa = quadrature(la);
        let xb = quadrature(lb);
        let hg = xa.kronecker(&xb).map(|x| Complex64::new(x, 0.0));
        for (c, d) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
            let eig = SymmetricEigen::new(h0.sector(c, d).clone());
            let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
            let ph = DMatrix::from_diagonal(&DVector::from_iterator(
                la * lb,
                eig.eigenvalues.iter().map(|e| Complex64::from_polar(1.0, e * t)),
            ));
            let u = &v * ph * v.adjoint();
            let full = &u * &hg * u.adjoint();
            let ka = conjugated_quadrature(&mode_hamiltonian(la, model.couplings.omega_a, model.couplings.lambda_m, c as f64), t);
            let kb = conjugated_quadrature(&mode_hamiltonian(lb, model.couplings.omega_b, model.couplings.lambda_M, d as f64), t);
            assert!((full - ka.kronecker(&kb)).norm() < 1e-11);
        }
    }

    #[test]
    fn zero_time_correction_vanishes() {
        let model = boosted(-0.01);
        let spec = HilbertSpec::for_model(&model).unwrap();
        let psi0 = initial_state(&model, spec).unwrap();
        let (corr, _) = dyson_first_order_state(&model, &psi0, &QuadratureSpec::default()).unwrap();
        assert_eq!(corr.norm(), 0.0);
    }

    #[test]
    fn correction_is_linear_in_gamma() {
        let spec = HilbertSpec::new(30, 30).unwrap();
        let t = 4.0;
        let corr = |g: f64| {
            let model = boosted(g);
            let free = Propagator::new(&build_hamiltonian(&model, spec, HamiltonianKind::Free).unwrap())
                .unwrap()
                .propagate(&initial_state(&model, spec).unwrap(), t);
            let (c, _) = dyson_first_order_state(&model, &free, &QuadratureSpec::default()).unwrap();
            c.amplitudes / Complex64::new(g, 0.0)
        };
        assert!((corr(-0.01) - corr(-0.02)).norm() < 1e-12);
    }

    #[test]
    fn generator_is_hermitian() {
        let model = Params::Si(PhysicalParams::reference()).model().unwrap();
        let spec = HilbertSpec::new(6, 6).unwrap();
        let gen = DysonGenerator::new(&model, 1.3e-3, &QuadratureSpec::default()).unwrap();
        let mut dense = DMatrix::<Complex64>::zeros(spec.dim(), spec.dim());
        for i in 0..spec.dim() {
            let mut e = StateVector::zeros(spec, 0.0);
            e.amplitudes[i] = Complex64::new(1.0, 0.0);
            dense.set_column(i, &gen.apply(&e).amplitudes);
        }
        let scale = dense.norm();
        assert!((&dense - dense.adjoint()).norm() < 1e-13 * scale);
    }
}
