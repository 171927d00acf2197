//! Exact dynamics in a truncated Fock basis.
//!
//! Each cavity photon is a two-level path qubit (`|0,1⟩` outside, `|1,0⟩`
//! inside the cavity); each mechanical mode keeps Fock levels `0..=n_max`.
//! Tensor order is photon c, photon d, mode a, mode b.

pub mod density;
pub mod dump;
pub mod hamiltonian;
pub mod hilbert;
pub mod interaction;
pub mod thermal;

pub use density::{linear_entropy_exact, linear_entropy_rod_a, photon_coherence, reduce, visibility_exact, DensityMatrix};
pub use hamiltonian::{build_hamiltonian, propagate, Hamiltonian, HamiltonianKind, Propagator};
pub use hilbert::{initial_state, HilbertSpec, LocalOp, StateVector, Subsystem, SYSTEM_ONE};
pub use interaction::{dyson_first_order_state, interaction_picture_check, DysonGenerator, InteractionResidual};
pub use thermal::{thermal_visibility_montecarlo, MonteCarloEstimate, SamplePath};
