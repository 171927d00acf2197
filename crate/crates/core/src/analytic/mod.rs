//! Closed-form and perturbative observables.

pub mod coherent;
pub mod entropy;
pub mod visibility;

pub use coherent::{coherent_trajectories, free_state, photon_coherence_closed, CoherentTrajectory};
pub use entropy::{linear_entropy_first_order, EntropyEstimate};
pub use visibility::{
    linspace, revival_peak_width, thermal_peak_hwhm, thermal_visibility, validate_times, visibility_first_order,
    visibility_shift, visibility_uncoupled, FirstOrderForm, Method, VisibilityTrace,
};
