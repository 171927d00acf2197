//! Hamiltonian matrices and exact propagation.
//!
//! The photon numbers `c₁†c₁` and `d₁†d₁` are conserved, so the Hamiltonian
//! is block diagonal over the four path sectors `(c, d) ∈ {0,1}²`. Each block
//! acts on the two mechanical modes and is real symmetric. The optical terms
//! `ħω_c(c₁†c₁ + c₂†c₂)` equal `ħω_c` on the single-photon space and only
//! contribute a global phase, so they are left out.
//!
//! Matrices store the generator `H/ħ` in rad/s.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracle::hilbert::{HilbertSpec, StateVector};
use crate::params::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// Uncoupled rods with bare frequencies `Ω` and couplings `Λ`.
    Bare,
    /// Gravitationally shifted `ω`, `λ` but without the `γ` term: the free
    /// Hamiltonian of the interaction picture.
    Free,
    /// The full coupled Hamiltonian including `ħγ(a†+a)(b†+b)`.
    Full,
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub spec: HilbertSpec,
    pub kind: HamiltonianKind,
    pub hbar: f64,
    /// Blocks indexed by `c·2 + d`, each over `n_a·N_b + n_b`.
    sectors: Vec<DMatrix<f64>>,
}

/// Builds the Hamiltonian of the requested kind from `model`'s couplings.
pub fn build_hamiltonian(model: &Model, spec: HilbertSpec, kind: HamiltonianKind) -> Result<Hamiltonian> {
    let dc = &model.couplings;
    let (omega_a, omega_b, lambda_m, lambda_big_m, gamma) = match kind {
        HamiltonianKind::Bare => (dc.bare_omega_a, dc.bare_omega_b, dc.Lambda_m, dc.Lambda_M, 0.0),
        HamiltonianKind::Free => (dc.omega_a, dc.omega_b, dc.lambda_m, dc.lambda_M, 0.0),
        HamiltonianKind::Full => (dc.omega_a, dc.omega_b, dc.lambda_m, dc.lambda_M, dc.gamma),
    };
    let (la, lb) = (spec.levels_a(), spec.levels_b());
    let sectors = (0..4)
        .map(|s| {
            let (c, d) = ((s / 2) as f64, (s % 2) as f64);
            let mut h = DMatrix::<f64>::zeros(la * lb, la * lb);
            let at = |na: usize, nb: usize| na * lb + nb;
            for na in 0..la {
                for nb in 0..lb {
                    let i = at(na, nb);
                    h[(i, i)] = omega_a * na as f64 + omega_b * nb as f64;
                    // position quadratures: ⟨n+1|(a + a†)|n⟩ = √(n+1)
                    if na + 1 < la {
                        let j = at(na + 1, nb);
                        let x = -c * lambda_m * omega_a * ((na + 1) as f64).sqrt();
                        h[(i, j)] += x;
                        h[(j, i)] += x;
                    }
                    if nb + 1 < lb {
                        let j = at(na, nb + 1);
                        let x = -d * lambda_big_m * omega_b * ((nb + 1) as f64).sqrt();
                        h[(i, j)] += x;
                        h[(j, i)] += x;
                    }
                    if gamma != 0.0 {
                        for (ma, xa) in quadrature_neighbours(na, la) {
                            for (mb, xb) in quadrature_neighbours(nb, lb) {
                                h[(at(ma, mb), i)] += gamma * xa * xb;
                            }
                        }
                    }
                }
            }
            h
        })
        .collect();
    Ok(Hamiltonian {
        spec,
        kind,
        hbar: model.hbar,
        sectors,
    })
}

/// Nonzero entries `(m, ⟨m|a + a†|n⟩)` of column `n`.
fn quadrature_neighbours(n: usize, levels: usize) -> impl Iterator<Item = (usize, f64)> {
    let down = (n > 0).then(|| (n - 1, (n as f64).sqrt()));
    let up = (n + 1 < levels).then(|| (n + 1, ((n + 1) as f64).sqrt()));
    down.into_iter().chain(up)
}

impl Hamiltonian {
    pub fn sector(&self, c: usize, d: usize) -> &DMatrix<f64> {
        &self.sectors[c * 2 + d]
    }

    /// Full `H/ħ` in tensor order.
    pub fn generator_dense(&self) -> DMatrix<f64> {
        let n = self.spec.sector_dim();
        let mut out = DMatrix::zeros(self.spec.dim(), self.spec.dim());
        for (s, block) in self.sectors.iter().enumerate() {
            out.view_mut((s * n, s * n), (n, n)).copy_from(block);
        }
        out
    }

    /// Full `H` in joules (or in the dimensionless energy unit).
    pub fn energy_dense(&self) -> DMatrix<f64> {
        self.generator_dense() * self.hbar
    }

    /// `(H/ħ) ψ`.
    pub fn apply(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.spec.sector_dim();
        let mut out = DVector::zeros(psi.len());
        for (s, block) in self.sectors.iter().enumerate() {
            let rows = s * n..(s + 1) * n;
            let re = DVector::from_iterator(n, psi.rows(s * n, n).iter().map(|z| z.re));
            let im = DVector::from_iterator(n, psi.rows(s * n, n).iter().map(|z| z.im));
            let (hr, hi) = (block * re, block * im);
            for (k, i) in rows.enumerate() {
                out[i] = Complex64::new(hr[k], hi[k]);
            }
        }
        out
    }

    /// `⟨ψ|H/ħ|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> f64 {
        psi.amplitudes.dotc(&self.apply(&psi.amplitudes)).re
    }
}

/// Eigendecomposition of each sector, reused for any number of times.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub spec: HilbertSpec,
    eigen: Vec<(DVector<f64>, DMatrix<f64>)>,
}

impl Propagator {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        let eigen = h
            .sectors
            .par_iter()
            .enumerate()
            .map(|(s, block)| {
                SymmetricEigen::try_new(block.clone(), f64::EPSILON, 0)
                    .map(|e| (e.eigenvalues, e.eigenvectors))
                    .ok_or_else(|| Error::convergence("eigendecomposition", format!("sector {s} did not converge")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Propagator { spec: h.spec, eigen })
    }

    /// `e^{−iHt/ħ} ψ₀`.
    pub fn propagate(&self, psi0: &StateVector, t: f64) -> StateVector {
        assert_eq!(psi0.spec, self.spec, "state and propagator truncations differ");
        let n = self.spec.sector_dim();
        let mut out = StateVector::zeros(self.spec, psi0.time + t);
        for (s, (energies, vectors)) in self.eigen.iter().enumerate() {
            let block = psi0.amplitudes.rows(s * n, n);
            if block.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let re = DVector::from_iterator(n, block.iter().map(|z| z.re));
            let im = DVector::from_iterator(n, block.iter().map(|z| z.im));
            let (cr, ci) = (vectors.tr_mul(&re), vectors.tr_mul(&im));
            let mut er = DVector::zeros(n);
            let mut ei = DVector::zeros(n);
            for k in 0..n {
                let phase = Complex64::from_polar(1.0, -energies[k] * t) * Complex64::new(cr[k], ci[k]);
                er[k] = phase.re;
                ei[k] = phase.im;
            }
            let (vr, vi) = (vectors * er, vectors * ei);
            for k in 0..n {
                out.amplitudes[s * n + k] = Complex64::new(vr[k], vi[k]);
            }
        }
        out
    }

    /// Propagation to each of `times`, evaluated in parallel; output order
    /// follows `times`.
    pub fn propagate_many(&self, psi0: &StateVector, times: &[f64]) -> Vec<StateVector> {
        times.par_iter().map(|&t| self.propagate(psi0, t)).collect()
    }
}

/// One-shot propagation. Prefer [`Propagator`] for several times.
pub fn propagate(h: &Hamiltonian, psi0: &StateVector, t: f64) -> Result<StateVector> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::domain("t", format!("must be finite and >= 0, got {t}")));
    }
    Ok(Propagator::new(h)?.propagate(psi0, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::hilbert::initial_state;
    use crate::params::{DimensionlessParams, Params, PhysicalParams};
    use approx::assert_relative_eq;

    fn reference_model() -> Model {
        Params::Si(PhysicalParams::reference()).model().unwrap()
    }

    #[test]
    fn hermitian_and_zero_gamma_matches_free() {
        let model = Params::Dimensionless(DimensionlessParams::boosted(0.0)).model().unwrap();
        let spec = HilbertSpec::new(5, 4).unwrap();
        let full = build_hamiltonian(&model, spec, HamiltonianKind::Full).unwrap().generator_dense();
        let free = build_hamiltonian(&model, spec, HamiltonianKind::Free).unwrap().generator_dense();
        assert_eq!(full, free);

        let model = Params::Dimensionless(DimensionlessParams::boosted(-0.03)).model().unwrap();
        let h = build_hamiltonian(&model, spec, HamiltonianKind::Full).unwrap().generator_dense();
        let asym = (&h - h.transpose()).abs().max();
        assert!(asym <= 1e-13 * h.abs().max());
    }

    #[test]
    fn no_constant_term() {
        let model = reference_model();
        let spec = HilbertSpec::new(6, 6).unwrap();
        let h = build_hamiltonian(&model, spec, HamiltonianKind::Full).unwrap().energy_dense();
        for c in 0..2 {
            for d in 0..2 {
                let i = spec.index(c, d, 0, 0);
                assert_eq!(h[(i, i)], 0.0);
            }
        }
    }

    #[test]
    fn optomechanical_block_matches_ladder() {
        // In the sector with the c photon inside the cavity, the a-quadrature
        // entries are -λ_m ħ ω_a √n on the first off-diagonal.
        let model = reference_model();
        let spec = HilbertSpec::new(2, 1).unwrap();
        let h = build_hamiltonian(&model, spec, HamiltonianKind::Bare).unwrap().energy_dense();
        let dc = model.couplings;
        let scale = dc.Lambda_m * model.hbar * dc.bare_omega_a;
        let e = model.hbar * dc.bare_omega_a;
        // mode-a block at c = 1, d = 0, n_b = 0, hand-computed
        let expected = [[0.0, -scale, 0.0], [-scale, e, -scale * 2f64.sqrt()], [0.0, -scale * 2f64.sqrt(), 2.0 * e]];
        for i in 0..3 {
            for j in 0..3 {
                let got = h[(spec.index(1, 0, i, 0), spec.index(1, 0, j, 0))];
                assert_relative_eq!(got, expected[i][j], max_relative = 1e-14, epsilon = 1e-60);
            }
        }
        // no optomechanical term when the photon bypasses the cavity
        assert_eq!(h[(spec.index(0, 0, 0, 0), spec.index(0, 0, 1, 0))], 0.0);
    }

    #[test]
    fn propagation_at_zero_time_is_identity() {
        let model = reference_model();
        let spec = HilbertSpec::new(30, 30).unwrap();
        let psi0 = initial_state(&model, spec).unwrap();
        let h = build_hamiltonian(&model, spec, HamiltonianKind::Full).unwrap();
        let psi = propagate(&h, &psi0, 0.0).unwrap();
        assert!((&psi.amplitudes - &psi0.amplitudes).norm() < 1e-13);
    }

    #[test]
    fn diagonal_hamiltonian_gives_pure_phases() {
        let mut model = Params::Dimensionless(DimensionlessParams::boosted(0.0)).model().unwrap();
        model.couplings.lambda_m = 0.0;
        model.couplings.lambda_M = 0.0;
        let spec = HilbertSpec::new(16, 16).unwrap();
        let psi0 = initial_state(&model, spec).unwrap();
        let h = build_hamiltonian(&model, spec, HamiltonianKind::Full).unwrap();
        let t = 1.7;
        let psi = propagate(&h, &psi0, t).unwrap();
        for idx in 0..spec.dim() {
            let [_, _, na, nb] = spec.digits(idx);
            let e = model.couplings.omega_a * na as f64 + model.couplings.omega_b * nb as f64;
            let expected = psi0.amplitudes[idx] * Complex64::from_polar(1.0, -e * t);
            assert!((psi.amplitudes[idx] - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn unitarity_and_energy_conservation() {
        let model = Params::Dimensionless(DimensionlessParams::boosted(-0.01)).model().unwrap();
        let spec = HilbertSpec::for_model(&model).unwrap();
        let psi0 = initial_state(&model, spec).unwrap();
        let h = build_hamiltonian(&model, spec, HamiltonianKind::Full).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let e0 = h.expectation(&psi0);
        for psi in prop.propagate_many(&psi0, &[0.3, 2.0, 7.5, 20.0]) {
            assert_relative_eq!(psi.norm(), 1.0, epsilon = 1e-10);
            assert_relative_eq!(h.expectation(&psi), e0, max_relative = 1e-10);
        }
    }
}
