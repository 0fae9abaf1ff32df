//! Mean-field Ehrenfest dynamics of a polariton wavepacket.
//!
//! The electronic state lives in the single-excitation space spanned by the
//! N site excitations |E_n⟩ and the M one-photon states |k⟩. Each site carries
//! N_b classical harmonic phonon modes in mass-weighted coordinates,
//! h_B = Σ (P² + ω²R²)/2, coupled linearly to the site energy through
//! c̃_α = c_α√(2ω_α/ħ). The amplitudes follow the TDSE with RK4 substeps; the
//! phonons follow velocity Verlet under the mean-field force
//! F_{n,α} = −c̃_α|c_n|² − ω_α²R_{n,α}.
//!
//! The cavity wavevectors are k_∥ = 2πj/(NL) on a ring of N sites, so the
//! exciton-photon coupling e^{ik_∥x_n} is exactly a length-N discrete Fourier
//! transform. The Hamiltonian is never materialized during propagation.

mod density;
mod ensemble;
mod hamiltonian;
mod propagate;
mod state;
mod wavefront;
mod wavepacket;
mod wigner;

pub use density::{photon_fraction, real_space_density};
pub use ensemble::{
    run_ensemble, EhrenfestRun, EnsembleConfig, EnsembleResult, TrajectoryRecord,
};
pub use hamiltonian::{build_hq, DenseHamiltonian, EhrenfestSystem, Workspace};
pub use propagate::{
    propagate_collect, propagate_trajectory, PropagationConfig, Snapshot, TrajectorySummary,
};
pub use state::{NuclearPhaseSpace, SingleExcitationState};
pub use wavefront::{track_wavefront, DensitySeries, WavefrontOptions, WavefrontResult};
pub use wavepacket::{initialize_wavepacket, PreparedWavepacket, WavepacketInit};
pub use wigner::{sample_wigner, sample_wigner_seeded, trajectory_rng};
