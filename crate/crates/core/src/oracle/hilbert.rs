//! Truncated Fock basis for the two path qubits and two mechanical modes.
//!
//! Each cavity photon lives in a two-dimensional path space: index 0 is
//! `|0,1⟩` (photon on the path that bypasses the cavity) and index 1 is
//! `|1,0⟩` (photon inside the cavity, `c₁†c₁ = 1`). The tensor order is
//! photon-c, photon-d, mode-a, mode-b, so a basis index is
//! `((c·2 + d)·N_a + n_a)·N_b + n_b` with `N = n_max + 1`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Model, Rod};

/// Largest total dimension the oracle will build.
pub const MAX_DIMENSION: usize = 1 << 16;

/// Tail mass allowed beyond the truncation.
pub const TAIL_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subsystem {
    PhotonC,
    PhotonD,
    ModeA,
    ModeB,
}

impl Subsystem {
    pub const ALL: [Subsystem; 4] = [Subsystem::PhotonC, Subsystem::PhotonD, Subsystem::ModeA, Subsystem::ModeB];

    pub fn position(self) -> usize {
        self as usize
    }

    pub fn photon(rod: Rod) -> Subsystem {
        match rod {
            Rod::A => Subsystem::PhotonC,
            Rod::B => Subsystem::PhotonD,
        }
    }

    pub fn mode(rod: Rod) -> Subsystem {
        match rod {
            Rod::A => Subsystem::ModeA,
            Rod::B => Subsystem::ModeB,
        }
    }
}

/// The photon and oscillator of rod A; the bipartition used for entanglement.
pub const SYSTEM_ONE: [Subsystem; 2] = [Subsystem::PhotonC, Subsystem::ModeA];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpec {
    pub n_max_a: usize,
    pub n_max_b: usize,
}

impl HilbertSpec {
    pub fn new(n_max_a: usize, n_max_b: usize) -> Result<Self> {
        if n_max_a < 1 || n_max_b < 1 {
            return Err(Error::domain("n_max", "Fock truncation must be at least 1"));
        }
        let spec = HilbertSpec { n_max_a, n_max_b };
        let dim = 4usize
            .checked_mul(spec.levels_a())
            .and_then(|d| d.checked_mul(spec.levels_b()))
            .unwrap_or(usize::MAX);
        if dim > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge { dim, limit: MAX_DIMENSION });
        }
        Ok(spec)
    }

    /// Truncation from the displacement bound `|β| + 2λ`:
    /// `n_max = ceil(x² + 8x + 16)`.
    pub fn for_model(model: &Model) -> Result<Self> {
        let a = truncation_rule(max_amplitude(model, Rod::A));
        let b = truncation_rule(max_amplitude(model, Rod::B));
        HilbertSpec::new(a, b)
    }

    pub fn levels_a(&self) -> usize {
        self.n_max_a + 1
    }

    pub fn levels_b(&self) -> usize {
        self.n_max_b + 1
    }

    pub fn levels(&self, rod: Rod) -> usize {
        match rod {
            Rod::A => self.levels_a(),
            Rod::B => self.levels_b(),
        }
    }

    /// Dimension of one photon-number sector (the two modes).
    pub fn sector_dim(&self) -> usize {
        self.levels_a() * self.levels_b()
    }

    pub fn dim(&self) -> usize {
        4 * self.sector_dim()
    }

    pub fn dims(&self) -> [usize; 4] {
        [2, 2, self.levels_a(), self.levels_b()]
    }

    pub fn index(&self, c: usize, d: usize, na: usize, nb: usize) -> usize {
        ((c * 2 + d) * self.levels_a() + na) * self.levels_b() + nb
    }

    /// Inverse of [`HilbertSpec::index`].
    pub fn digits(&self, idx: usize) -> [usize; 4] {
        let nb = idx % self.levels_b();
        let rest = idx / self.levels_b();
        let na = rest % self.levels_a();
        let rest = rest / self.levels_a();
        [rest / 2, rest % 2, na, nb]
    }

    /// Errors unless a coherent state of amplitude up to `|β| + 2λ` keeps
    /// its tail mass below [`TAIL_LIMIT`] in both modes.
    pub fn check_adequacy(&self, model: &Model) -> Result<()> {
        for (rod, label, n_max) in [(Rod::A, 'a', self.n_max_a), (Rod::B, 'b', self.n_max_b)] {
            let amp = max_amplitude(model, rod);
            let tail = poisson_tail(amp * amp, n_max);
            if tail.is_nan() || tail >= TAIL_LIMIT {
                let mut suggested = n_max;
                while poisson_tail(amp * amp, suggested) >= TAIL_LIMIT {
                    suggested += 1;
                }
                return Err(Error::Truncation {
                    mode: label,
                    n_max,
                    tail,
                    limit: TAIL_LIMIT,
                    suggested,
                });
            }
        }
        Ok(())
    }
}

fn max_amplitude(model: &Model, rod: Rod) -> f64 {
    model.beta(rod).norm() + 2.0 * model.couplings.lambda(rod).abs()
}

fn truncation_rule(x: f64) -> usize {
    (x * x + 8.0 * x + 16.0).ceil() as usize
}

/// Poisson mass beyond `n_max` for mean `mu`, summed directly over the tail.
pub fn poisson_tail(mu: f64, n_max: usize) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let n0 = n_max + 1;
    let mut log_term = -mu + n0 as f64 * mu.ln() - ln_factorial(n0);
    let mut sum = 0.0;
    let mut n = n0;
    loop {
        let term = log_term.exp();
        sum += term;
        n += 1;
        log_term += mu.ln() - (n as f64).ln();
        if (n as f64) > mu && term <= 1e-20 * sum.max(f64::MIN_POSITIVE) {
            break;
        }
        if n > n0 + 100_000 {
            break;
        }
    }
    sum.min(1.0)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Coherent state `|α⟩` on `levels` Fock levels, renormalized after
/// truncation.
pub fn coherent_state(alpha: Complex64, levels: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(levels);
    v[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..levels {
        v[n] = v[n - 1] * alpha / (n as f64).sqrt();
    }
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Equal superposition of the two paths, `(|0,1⟩ + |1,0⟩)/√2`.
pub fn path_superposition() -> DVector<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: DVector<Complex64>,
    pub spec: HilbertSpec,
    pub time: f64,
}

impl StateVector {
    pub fn zeros(spec: HilbertSpec, time: f64) -> Self {
        StateVector {
            amplitudes: DVector::zeros(spec.dim()),
            spec,
            time,
        }
    }

    /// Product of the four factor states in tensor order.
    pub fn product(
        spec: HilbertSpec,
        photon_c: &DVector<Complex64>,
        photon_d: &DVector<Complex64>,
        mode_a: &DVector<Complex64>,
        mode_b: &DVector<Complex64>,
    ) -> Self {
        let mut out = StateVector::zeros(spec, 0.0);
        for c in 0..2 {
            for d in 0..2 {
                let pc = photon_c[c] * photon_d[d];
                for na in 0..spec.levels_a() {
                    let pa = pc * mode_a[na];
                    for nb in 0..spec.levels_b() {
                        out.amplitudes[spec.index(c, d, na, nb)] = pa * mode_b[nb];
                    }
                }
            }
        }
        out
    }

    /// Product of a rod-A state (index `c·N_a + n_a`) and a rod-B state
    /// (index `d·N_b + n_b`).
    pub fn bipartite(spec: HilbertSpec, one: &DVector<Complex64>, two: &DVector<Complex64>, time: f64) -> Self {
        let (la, lb) = (spec.levels_a(), spec.levels_b());
        assert_eq!(one.len(), 2 * la, "rod-A factor has wrong dimension");
        assert_eq!(two.len(), 2 * lb, "rod-B factor has wrong dimension");
        let mut out = StateVector::zeros(spec, time);
        for c in 0..2 {
            for d in 0..2 {
                for na in 0..la {
                    let x = one[c * la + na];
                    for nb in 0..lb {
                        out.amplitudes[spec.index(c, d, na, nb)] = x * two[d * lb + nb];
                    }
                }
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Applies a single-subsystem operator.
    pub fn apply(&self, op: LocalOp) -> StateVector {
        StateVector {
            amplitudes: apply_local(&self.spec, op, &self.amplitudes),
            spec: self.spec,
            time: self.time,
        }
    }
}

/// Operators acting on one subsystem; the ladder operators are truncated at
/// the top level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalOp {
    Raise(Rod),
    Lower(Rod),
    Number(Rod),
    /// `c₁†c₁` (or `d₁†d₁`): projector onto the in-cavity path.
    InCavity(Rod),
}

pub fn apply_local(spec: &HilbertSpec, op: LocalOp, psi: &DVector<Complex64>) -> DVector<Complex64> {
    let mut out = DVector::zeros(psi.len());
    for (idx, amp) in psi.iter().enumerate() {
        if *amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        let [c, d, na, nb] = spec.digits(idx);
        match op {
            LocalOp::InCavity(Rod::A) => {
                if c == 1 {
                    out[idx] = *amp;
                }
            }
            LocalOp::InCavity(Rod::B) => {
                if d == 1 {
                    out[idx] = *amp;
                }
            }
            LocalOp::Number(Rod::A) => out[idx] = amp * na as f64,
            LocalOp::Number(Rod::B) => out[idx] = amp * nb as f64,
            LocalOp::Raise(Rod::A) => {
                if na + 1 < spec.levels_a() {
                    out[spec.index(c, d, na + 1, nb)] += amp * ((na + 1) as f64).sqrt();
                }
            }
            LocalOp::Raise(Rod::B) => {
                if nb + 1 < spec.levels_b() {
                    out[spec.index(c, d, na, nb + 1)] += amp * ((nb + 1) as f64).sqrt();
                }
            }
            LocalOp::Lower(Rod::A) => {
                if na > 0 {
                    out[spec.index(c, d, na - 1, nb)] += amp * (na as f64).sqrt();
                }
            }
            LocalOp::Lower(Rod::B) => {
                if nb > 0 {
                    out[spec.index(c, d, na, nb - 1)] += amp * (nb as f64).sqrt();
                }
            }
        }
    }
    out
}

/// Initial state: both photons in equal path superposition, both rods in
/// (truncated, renormalized) coherent states.
pub fn initial_state(model: &Model, spec: HilbertSpec) -> Result<StateVector> {
    spec.check_adequacy(model)?;
    let path = path_superposition();
    Ok(StateVector::product(
        spec,
        &path,
        &path,
        &coherent_state(model.beta_m, spec.levels_a()),
        &coherent_state(model.beta_M, spec.levels_b()),
    ))
}
