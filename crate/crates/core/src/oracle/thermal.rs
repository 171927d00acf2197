//! Monte Carlo average over the thermal coherent-state mixture.
//!
//! A thermal oscillator is the Gaussian mixture
//! `(πn̄)⁻¹ ∫ d²β e^{−|β|²/n̄} |β⟩⟨β|`. Each sample runs the pure coherent
//! dynamics for one `β`; the complex photon off-diagonal element is averaged
//! over samples and the visibility is twice the modulus of that mean.
//! Averaging visibilities instead would miss the effect entirely, since the
//! magnitude of the off-diagonal element does not depend on `β`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::coherent::photon_coherence_closed;
use crate::error::{Error, Result};
use crate::oracle::density::photon_coherence;
use crate::oracle::hamiltonian::Propagator;
use crate::oracle::hilbert::{coherent_state, path_superposition, HilbertSpec, StateVector};
use crate::params::{Model, Rod};

pub const MIN_SAMPLES: usize = 100;
pub const BOOTSTRAP_RESAMPLES: usize = 256;

/// How each sample is evolved.
#[derive(Clone, Copy)]
pub enum SamplePath<'a> {
    /// Closed-form coherent dynamics (requires `γ = 0` to be exact).
    ClosedForm,
    /// Exact propagation with a prepared propagator.
    Oracle(&'a Propagator, HilbertSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Draws `β = sqrt(n̄/2)(x + iy)` with `x, y` standard normal (ziggurat
/// sampler) from a ChaCha8 stream seeded by `seed`.
pub fn thermal_amplitudes(nbar: f64, n_samples: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (0.5 * nbar).sqrt();
    (0..n_samples)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            Complex64::new(s * x, s * y)
        })
        .collect()
}

/// Pairwise sum, so the rounding pattern depends only on the length.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 8 {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Thermal visibility of the rod-A photon at time `t`.
pub fn thermal_visibility_montecarlo(
    model: &Model,
    nbar: f64,
    t: f64,
    n_samples: usize,
    seed: u64,
    path: SamplePath<'_>,
) -> Result<MonteCarloEstimate> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::domain("nbar", format!("must be finite and non-negative, got {nbar}")));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::domain("n_samples", format!("need at least {MIN_SAMPLES}, got {n_samples}")));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain("t", format!("must be non-negative, got {t}")));
    }
    let betas = thermal_amplitudes(nbar, n_samples, seed);
    let samples: Vec<Complex64> = match path {
        SamplePath::ClosedForm => betas
            .par_iter()
            .map(|b| photon_coherence_closed(model, Rod::A, *b, t))
            .collect(),
        SamplePath::Oracle(prop, spec) => betas
            .par_iter()
            .map(|b| {
                let psi0 = StateVector::product(
                    spec,
                    &path_superposition(),
                    &path_superposition(),
                    &coherent_state(*b, spec.levels_a()),
                    &coherent_state(model.beta_M, spec.levels_b()),
                );
                photon_coherence(&prop.propagate(&psi0, t), Rod::A)
            })
            .collect(),
    };
    let visibility = |xs: &[Complex64]| 2.0 * (pairwise_sum(xs) / xs.len() as f64).norm();
    let mean = visibility(&samples);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let indices: Vec<Vec<usize>> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n_samples).map(|_| rng.random_range(0..n_samples)).collect())
        .collect();
    let boots: Vec<f64> = indices
        .par_iter()
        .map(|idx| {
            let resampled: Vec<Complex64> = idx.iter().map(|i| samples[*i]).collect();
            visibility(&resampled)
        })
        .collect();
    let bm = boots.iter().sum::<f64>() / boots.len() as f64;
    let var = boots.iter().map(|b| (b - bm).powi(2)).sum::<f64>() / (boots.len() - 1) as f64;

    Ok(MonteCarloEstimate {
        mean,
        std_error: var.sqrt(),
        n_samples,
        seed,
    })
}
