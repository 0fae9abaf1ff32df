//! Phonon-induced renormalization of cavity exciton-polariton bands and group
//! velocities.
//!
//! The crate has two independent engines that are meant to be checked against
//! each other:
//!
//! * [`greens`] evaluates the first-order (Fan-Migdal) self-energy of the
//!   polariton branches in a Drude-Lorentz phonon bath and differentiates the
//!   renormalized band to get the renormalized group velocity.
//! * [`ehrenfest`] propagates a lower-polariton wavepacket with mean-field
//!   Ehrenfest dynamics (quantum exciton/photon amplitudes, classical phonons)
//!   and extracts the group velocity from the motion of the wavefront.
//!
//! Both are built on the model in [`model`]: the Holstein-Tavis-Cummings
//! Hamiltonian with a Fabry-Perot cavity dispersion and a `k`-dependent
//! light-matter coupling.
//!
//! Units are fixed across the whole crate: energies in eV, times in fs,
//! lengths in nm, temperatures in K. See [`units`].
//!
//! ```
//! use polariton::model::{polariton_point, ModelParams};
//!
//! let params = ModelParams::reference();
//! let p = polariton_point(0.0, &params);
//! assert!((p.energy_lp - 1.8063).abs() < 1e-4);
//! assert!((p.hopfield_lp - 0.3787).abs() < 1e-4);
//! ```

pub mod ehrenfest;
pub mod error;
pub mod greens;
pub mod model;
pub mod stats;
pub mod units;

pub use error::{Error, Result};

// The guide in book/ is compiled as doctests so its snippets stay in sync
// with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/bath.md")]
    mod bath {}
    #[doc = include_str!("../../../book/src/self_energy.md")]
    mod self_energy {}
    #[doc = include_str!("../../../book/src/group_velocity.md")]
    mod group_velocity {}
    #[doc = include_str!("../../../book/src/ehrenfest.md")]
    mod ehrenfest {}
    #[doc = include_str!("../../../book/src/wavefront.md")]
    mod wavefront {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
