//! Reduced density matrices, visibility and linear entropy.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::hilbert::{StateVector, Subsystem, SYSTEM_ONE};
use crate::params::Rod;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: DMatrix<Complex64>,
    /// Subsystems in tensor order.
    pub subsystems: Vec<Subsystem>,
    pub dims: Vec<usize>,
}

impl DensityMatrix {
    /// `|ψ⟩⟨ψ|` over all four subsystems.
    pub fn from_state(psi: &StateVector) -> Self {
        let v = &psi.amplitudes;
        DensityMatrix {
            matrix: v * v.adjoint(),
            subsystems: Subsystem::ALL.to_vec(),
            dims: psi.spec.dims().to_vec(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`, which for a Hermitian matrix is the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().collect()
    }

    /// Checks Hermiticity (1e-12), unit trace (1e-10) and positivity
    /// (eigenvalue floor −1e-10).
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(Error::convergence("density matrix", format!("not Hermitian: {herm:e}")));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::convergence("density matrix", format!("trace {tr} != 1")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::convergence("density matrix", format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Partial trace keeping `keep`.
    pub fn partial_trace(&self, keep: &[Subsystem]) -> Result<DensityMatrix> {
        let layout = Layout::new(&self.subsystems, &self.dims, keep)?;
        let mut out = DMatrix::zeros(layout.kept_dim, layout.kept_dim);
        for i in 0..self.matrix.nrows() {
            let (ki, ri) = layout.split(i);
            for j in 0..self.matrix.ncols() {
                let (kj, rj) = layout.split(j);
                if ri == rj {
                    out[(ki, kj)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityMatrix {
            matrix: out,
            subsystems: layout.kept,
            dims: layout.kept_dims,
        })
    }
}

/// Index bookkeeping for splitting a composite index into kept and traced
/// parts.
struct Layout {
    dims: Vec<usize>,
    keep_mask: Vec<bool>,
    kept: Vec<Subsystem>,
    kept_dims: Vec<usize>,
    kept_dim: usize,
    traced_dim: usize,
}

impl Layout {
    fn new(subsystems: &[Subsystem], dims: &[usize], keep: &[Subsystem]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Subsystem("keep set is empty".into()));
        }
        for s in keep {
            if !subsystems.contains(s) {
                return Err(Error::Subsystem(format!("{s:?} is not part of this state")));
            }
        }
        let keep_mask: Vec<bool> = subsystems.iter().map(|s| keep.contains(s)).collect();
        let n_kept = keep_mask.iter().filter(|k| **k).count();
        if n_kept != keep.len() {
            return Err(Error::Subsystem("keep set has duplicates".into()));
        }
        if n_kept == subsystems.len() {
            return Err(Error::Subsystem("keep set must be a proper subset".into()));
        }
        let kept: Vec<Subsystem> = subsystems.iter().zip(&keep_mask).filter(|(_, k)| **k).map(|(s, _)| *s).collect();
        let kept_dims: Vec<usize> = dims.iter().zip(&keep_mask).filter(|(_, k)| **k).map(|(d, _)| *d).collect();
        let kept_dim = kept_dims.iter().product();
        let traced_dim = dims.iter().product::<usize>() / kept_dim;
        Ok(Layout {
            dims: dims.to_vec(),
            keep_mask,
            kept,
            kept_dims,
            kept_dim,
            traced_dim,
        })
    }

    fn split(&self, mut idx: usize) -> (usize, usize) {
        let (mut k, mut r) = (0, 0);
        let (mut kw, mut rw) = (1, 1);
        for (d, keep) in self.dims.iter().zip(&self.keep_mask).rev() {
            let digit = idx % d;
            idx /= d;
            if *keep {
                k += digit * kw;
                kw *= d;
            } else {
                r += digit * rw;
                rw *= d;
            }
        }
        (k, r)
    }
}

/// Reduced state of `psi` on `keep`, as `M M†` with `M` the amplitudes
/// reshaped to kept × traced.
pub fn reduce(psi: &StateVector, keep: &[Subsystem]) -> Result<DensityMatrix> {
    let layout = Layout::new(&Subsystem::ALL, &psi.spec.dims(), keep)?;
    let mut m = DMatrix::zeros(layout.kept_dim, layout.traced_dim);
    for (idx, amp) in psi.amplitudes.iter().enumerate() {
        let (k, r) = layout.split(idx);
        m[(k, r)] = *amp;
    }
    Ok(DensityMatrix {
        matrix: &m * m.adjoint(),
        subsystems: layout.kept,
        dims: layout.kept_dims,
    })
}

/// `2 |⟨0,1|ρ|1,0⟩|` of the photon in the cavity of `rod`.
pub fn visibility_exact(psi: &StateVector, cavity: Rod) -> Result<f64> {
    let rho = reduce(psi, &[Subsystem::photon(cavity)])?;
    Ok(2.0 * rho.matrix[(0, 1)].norm())
}

/// Off-diagonal element `⟨0,1|ρ|1,0⟩` of the photon in `cavity`.
pub fn photon_coherence(psi: &StateVector, cavity: Rod) -> Complex64 {
    let spec = psi.spec;
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, amp) in psi.amplitudes.iter().enumerate() {
        let [c, d, na, nb] = spec.digits(idx);
        let (outside, other) = match cavity {
            Rod::A if c == 0 => (true, spec.index(1, d, na, nb)),
            Rod::B if d == 0 => (true, spec.index(c, 1, na, nb)),
            _ => (false, 0),
        };
        if outside {
            acc += amp * psi.amplitudes[other].conj();
        }
    }
    acc
}

/// `1 − Tr ρ₁²` for the reduced state on `system1`.
pub fn linear_entropy_exact(psi: &StateVector, system1: &[Subsystem]) -> Result<f64> {
    Ok(1.0 - reduce(psi, system1)?.purity())
}

/// Linear entropy of the rod-A system (photon c with mode a).
pub fn linear_entropy_rod_a(psi: &StateVector) -> Result<f64> {
    linear_entropy_exact(psi, &SYSTEM_ONE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::hilbert::{coherent_state, path_superposition, HilbertSpec};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn product_state_factors_are_pure() {
        let spec = HilbertSpec::new(4, 3).unwrap();
        let psi = StateVector::product(
            spec,
            &path_superposition(),
            &DVector::from_vec(vec![c(0.6), Complex64::new(0.0, 0.8)]),
            &coherent_state(Complex64::new(0.5, 0.2), 5),
            &coherent_state(Complex64::new(-0.3, 0.0), 4),
        );
        for keep in [
            vec![Subsystem::PhotonC],
            vec![Subsystem::ModeB],
            vec![Subsystem::PhotonC, Subsystem::ModeA],
            vec![Subsystem::PhotonD, Subsystem::ModeA, Subsystem::ModeB],
        ] {
            let rho = reduce(&psi, &keep).unwrap();
            rho.validate().unwrap();
            assert_relative_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        }
        let rho_d = reduce(&psi, &[Subsystem::PhotonD]).unwrap();
        assert_relative_eq!(rho_d.matrix[(0, 0)].re, 0.36, epsilon = 1e-14);
        assert_relative_eq!(visibility_exact(&psi, Rod::A).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(photon_coherence(&psi, Rod::A).re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn bell_pair_of_photons_is_maximally_mixed() {
        let spec = HilbertSpec::new(1, 1).unwrap();
        let mut psi = StateVector::zeros(spec, 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        psi.amplitudes[spec.index(0, 1, 0, 0)] = c(s);
        psi.amplitudes[spec.index(1, 0, 0, 0)] = c(s);
        let rho = reduce(&psi, &[Subsystem::PhotonC]).unwrap();
        assert_relative_eq!(rho.purity(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(rho.matrix[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_eq!(rho.matrix[(0, 1)], c(0.0));
        assert_eq!(visibility_exact(&psi, Rod::A).unwrap(), 0.0);
    }

    #[test]
    fn partial_trace_of_full_matrix_agrees_with_reshape() {
        let spec = HilbertSpec::new(2, 2).unwrap();
        let mut psi = StateVector::zeros(spec, 0.0);
        for (i, a) in psi.amplitudes.iter_mut().enumerate() {
            *a = Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        }
        let n = psi.norm();
        psi.amplitudes /= c(n);
        let full = DensityMatrix::from_state(&psi);
        for keep in [vec![Subsystem::PhotonC, Subsystem::ModeA], vec![Subsystem::ModeB]] {
            let a = full.partial_trace(&keep).unwrap();
            let b = reduce(&psi, &keep).unwrap();
            assert!((&a.matrix - &b.matrix).norm() < 1e-14);
        }
        // traced twice equals traced at once
        let two_step = full
            .partial_trace(&[Subsystem::PhotonC, Subsystem::ModeA])
            .unwrap()
            .partial_trace(&[Subsystem::ModeA])
            .unwrap();
        let one_step = reduce(&psi, &[Subsystem::ModeA]).unwrap();
        assert!((&two_step.matrix - &one_step.matrix).norm() < 1e-14);
    }

    #[test]
    fn keep_set_errors() {
        let spec = HilbertSpec::new(1, 1).unwrap();
        let psi = StateVector::zeros(spec, 0.0);
        assert!(reduce(&psi, &[]).is_err());
        assert!(reduce(&psi, &Subsystem::ALL).is_err());
        assert!(reduce(&psi, &[Subsystem::ModeA, Subsystem::ModeA]).is_err());
        let rho = reduce(&psi, &[Subsystem::ModeA, Subsystem::ModeB]).unwrap();
        assert!(rho.partial_trace(&[Subsystem::PhotonC]).is_err());
    }
}
