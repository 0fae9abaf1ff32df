use serde::{Deserialize, Serialize};

use super::{Branch, ModelParams};
use crate::error::{Error, Result};
use crate::units::{HBAR, HBAR_C};

/// Photon energy ħω_k = ħc·√(k_⊥² + k_∥²) (eV).
pub fn cavity_energy(k_parallel: f64, params: &ModelParams) -> f64 {
    params.omega_c.hypot(HBAR_C * k_parallel)
}

/// Collective coupling √N·g_k = √N·g_c·√(ω_k/ω_c)·cos θ with tan θ = k_∥/k_⊥ (eV).
///
/// Since cos θ = ω_c/ω_k this reduces to √N·g_c·√(ω_c/ω_k).
pub fn collective_coupling(k_parallel: f64, params: &ModelParams) -> f64 {
    params.gc_collective * (params.omega_c / cavity_energy(k_parallel, params)).sqrt()
}

/// Polariton eigenstructure at one wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub k_parallel: f64,
    /// ħω_k (eV).
    pub photon_energy: f64,
    /// √N·g_k (eV).
    pub coupling: f64,
    /// ħω_{+k} (eV).
    pub energy_up: f64,
    /// ħω_{−k} (eV).
    pub energy_lp: f64,
    /// Θ_k in (0, π/2) (rad).
    pub mixing_angle: f64,
    /// |C_k|² = sin²Θ_k, the matter fraction of the lower polariton.
    pub hopfield_lp: f64,
    /// cos²Θ_k, the matter fraction of the upper polariton.
    pub hopfield_up: f64,
    /// ħΔω_{−k} = ħω₀ − ħω_{−k} (eV).
    pub dark_gap: f64,
}

impl BandPoint {
    pub fn energy(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Upper => self.energy_up,
            Branch::Lower => self.energy_lp,
        }
    }

    /// Squared Hopfield coefficient ζ²_{μk} (matter fraction) of a branch.
    pub fn matter_fraction(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Upper => self.hopfield_up,
            Branch::Lower => self.hopfield_lp,
        }
    }
}

pub fn polariton_point(k_parallel: f64, params: &ModelParams) -> BandPoint {
    let photon_energy = cavity_energy(k_parallel, params);
    let coupling = collective_coupling(k_parallel, params);
    let detuning = photon_energy - params.omega0;
    let rabi = detuning.hypot(2.0 * coupling);
    let mean = 0.5 * (photon_energy + params.omega0);
    let energy_up = mean + 0.5 * rabi;
    let energy_lp = mean - 0.5 * rabi;

    // tan 2Θ = 2G/(ω₀ − ω_k) on (0, π): Θ → 0 for a photon-like LP.
    let mixing_angle = 0.5 * (2.0 * coupling).atan2(-detuning);
    let (hopfield_lp, hopfield_up) = if rabi > 0.0 {
        let x = detuning / rabi;
        (0.5 * (1.0 + x), 0.5 * (1.0 - x))
    } else {
        (0.5, 0.5)
    };

    BandPoint {
        k_parallel,
        photon_energy,
        coupling,
        energy_up,
        energy_lp,
        mixing_angle,
        hopfield_lp,
        hopfield_up,
        dark_gap: params.omega0 - energy_lp,
    }
}

/// Bare group velocity dω_{±k}/dk_∥ (nm/fs), differentiated analytically
/// through the cavity dispersion and the `k`-dependence of g_k.
pub fn bare_group_velocity(k_parallel: f64, branch: Branch, params: &ModelParams) -> f64 {
    let e = cavity_energy(k_parallel, params);
    let de = HBAR_C * HBAR_C * k_parallel / e;
    let g2 = params.gc_collective * params.gc_collective * params.omega_c / e;
    let dg2 = -g2 / e * de;
    let detuning = e - params.omega0;
    let rabi = (detuning * detuning + 4.0 * g2).sqrt();
    let drabi = if rabi > 0.0 {
        (detuning * de + 2.0 * dg2) / rabi
    } else {
        0.0
    };
    let sign = match branch {
        Branch::Upper => 1.0,
        Branch::Lower => -1.0,
    };
    0.5 * (de + sign * drabi) / HBAR
}

/// Non-negative wavevector at which the lower polariton has energy `energy`.
///
/// Solves (E_k − ε)(ω₀ − ε) = G_c²·ω_c/E_k for the photon energy E_k in
/// closed form. The LP band spans [ε_−(0), ω₀) for k_∥ ≥ 0.
pub fn lp_wavevector_for_energy(energy: f64, params: &ModelParams) -> Result<f64> {
    let bottom = polariton_point(0.0, params).energy_lp;
    if !(energy >= bottom && energy < params.omega0) {
        return Err(Error::Domain(format!(
            "LP energy {energy} eV outside the band [{bottom}, {}) eV",
            params.omega0
        )));
    }
    let g2wc = params.gc_collective * params.gc_collective * params.omega_c;
    let e = 0.5 * (energy + (energy * energy + 4.0 * g2wc / (params.omega0 - energy)).sqrt());
    let kk = (e * e - params.omega_c * params.omega_c).max(0.0);
    Ok(kk.sqrt() / HBAR_C)
}
