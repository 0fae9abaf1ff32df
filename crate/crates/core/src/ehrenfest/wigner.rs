use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::hamiltonian::EhrenfestSystem;
use super::state::NuclearPhaseSpace;
use crate::error::Result;
use crate::greens::ThermalState;
use crate::model::{BathSpec, ModelParams};
use crate::units::HBAR;

/// Deterministic generator for trajectory `index` of an ensemble seeded with
/// `base_seed`. Each trajectory gets its own ChaCha stream, so results do not
/// depend on scheduling.
pub fn trajectory_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Draw (R, P) for every site and bath mode from the thermal Wigner
/// distribution of a harmonic oscillator:
/// Var R = (ħ/2ω)·coth(βħω/2), Var P = (ħω/2)·coth(βħω/2).
pub fn sample_wigner<R: Rng + ?Sized>(
    system: &EhrenfestSystem,
    thermal: &ThermalState,
    rng: &mut R,
) -> Result<NuclearPhaseSpace> {
    thermal.validate()?;
    let nb = system.n_bath_modes();
    let n = system.n_sites();
    let beta = thermal.beta();
    let widths: Vec<(f64, f64)> = system
        .bath_frequencies()
        .iter()
        .map(|&w| {
            let x = 0.5 * beta * HBAR * w;
            let coth = 1.0 / x.tanh();
            ((0.5 * HBAR / w * coth).sqrt(), (0.5 * HBAR * w * coth).sqrt())
        })
        .collect();
    let mut out = NuclearPhaseSpace::zeros(n, nb);
    for site in 0..n {
        for (a, (sr, sp)) in widths.iter().enumerate() {
            let zr: f64 = StandardNormal.sample(rng);
            let zp: f64 = StandardNormal.sample(rng);
            out.positions[site * nb + a] = sr * zr;
            out.momenta[site * nb + a] = sp * zp;
        }
    }
    Ok(out)
}

/// Convenience wrapper: builds the system and samples with
/// `trajectory_rng(seed, 0)`.
pub fn sample_wigner_seeded(
    params: &ModelParams,
    bath: &BathSpec,
    thermal: &ThermalState,
    seed: u64,
) -> Result<NuclearPhaseSpace> {
    let system = EhrenfestSystem::new(params, bath)?;
    sample_wigner(&system, thermal, &mut trajectory_rng(seed, 0))
}
