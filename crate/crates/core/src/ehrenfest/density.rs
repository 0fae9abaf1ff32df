use num_complex::Complex64;

use super::hamiltonian::{EhrenfestSystem, Workspace};
use super::state::SingleExcitationState;
use crate::error::Result;
use crate::model::{BathSpec, ModelParams};

impl EhrenfestSystem {
    /// ρ_n = |c_n|² + |N^{−1/2} Σ_k c_k e^{ikx_n}|², the exciton population
    /// plus the photon field sampled at the sites. Σ_n ρ_n = ⟨ψ|ψ⟩.
    pub fn density_into(&self, state: &SingleExcitationState, out: &mut [f64], ws: &mut Workspace) {
        let n = self.n_sites();
        let scale = 1.0 / (n as f64).sqrt();
        let buf = ws.fft_b_mut();
        buf.fill(Complex64::new(0.0, 0.0));
        for (m, &bin) in self.bins().iter().enumerate() {
            buf[bin] = state.photon()[m] * scale;
        }
        self.inverse_in_place(ws);
        let field = ws.fft_b();
        for (i, o) in out.iter_mut().enumerate() {
            *o = state.exciton()[i].norm_sqr() + field[i].norm_sqr();
        }
    }
}

/// Real-space density of `state` on the sites of `params`.
pub fn real_space_density(state: &SingleExcitationState, params: &ModelParams) -> Result<Vec<f64>> {
    let bath = BathSpec {
        lambda: 0.0,
        omega_f: 1.0,
        n_modes: 1,
    };
    let system = EhrenfestSystem::new(params, &bath)?;
    let nuclear = super::state::NuclearPhaseSpace::zeros(params.n_molecules, 1);
    system.check(state, &nuclear)?;
    let mut out = vec![0.0; params.n_molecules];
    let mut ws = system.workspace();
    system.density_into(state, &mut out, &mut ws);
    Ok(out)
}

/// Σ_k |c_k|² / ⟨ψ|ψ⟩.
pub fn photon_fraction(state: &SingleExcitationState) -> f64 {
    state.photon_population() / state.norm_sqr()
}
