//! Two torsional oscillators coupled through Newtonian gravity, each carrying
//! a mirror of an optical cavity that holds one photon in a path
//! superposition.
//!
//! The crate evaluates the photon visibility and the rod-rod entanglement in
//! closed and first-order perturbative form ([`analytic`]), and checks those
//! formulas against exact propagation in a truncated Fock basis
//! ([`oracle`]). [`scan`] runs parameter sweeps and scaling studies.
//!
//! ```
//! use optograv::params::{Params, PhysicalParams};
//!
//! let model = Params::Si(PhysicalParams::reference()).model()?;
//! let dt_ns = model.couplings.delta_T * 1e9;
//! assert!((dt_ns - 0.78).abs() < 0.01);
//! # Ok::<(), optograv::Error>(())
//! ```

pub mod analytic;
pub mod config;
pub mod constants;
pub mod error;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod scan;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/parameters.md")]
    mod parameters {}
    #[doc = include_str!("../../../book/src/visibility.md")]
    mod visibility {}
    #[doc = include_str!("../../../book/src/entanglement.md")]
    mod entanglement {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/thermal.md")]
    mod thermal {}
    #[doc = include_str!("../../../book/src/scans.md")]
    mod scans {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
