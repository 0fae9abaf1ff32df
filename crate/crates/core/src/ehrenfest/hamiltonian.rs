use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::state::{NuclearPhaseSpace, SingleExcitationState};
use crate::error::{Error, Result};
use crate::model::{cavity_energy, collective_coupling, discretize_bath, BathSpec, ModelParams};
use crate::units::HBAR;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Static part of the Ehrenfest Hamiltonian shared by every trajectory:
/// photon energies, per-molecule couplings, bath frequencies and FFT plans.
#[derive(Clone)]
pub struct EhrenfestSystem {
    params: ModelParams,
    /// FFT bin of each cavity mode, j mod N.
    bins: Vec<usize>,
    k_parallel: Vec<f64>,
    photon_energy: Vec<f64>,
    /// ħg_k = √N g_k / √N (eV).
    coupling: Vec<f64>,
    /// Angular frequencies ω_α (fs⁻¹).
    omega: Vec<f64>,
    /// c̃_α (√eV/fs).
    bath_coupling: Vec<f64>,
    reference_energy: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for EhrenfestSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EhrenfestSystem")
            .field("params", &self.params)
            .field("bath_modes", &self.omega.len())
            .finish()
    }
}

/// Scratch buffers for one trajectory.
#[derive(Debug, Clone)]
pub struct Workspace {
    fft_a: Vec<Complex64>,
    fft_b: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Workspace {
    pub(crate) fn fft_b(&self) -> &[Complex64] {
        &self.fft_b
    }

    pub(crate) fn fft_b_mut(&mut self) -> &mut [Complex64] {
        &mut self.fft_b
    }
}

impl EhrenfestSystem {
    pub fn new(params: &ModelParams, bath: &BathSpec) -> Result<Self> {
        params.validate()?;
        let modes = discretize_bath(bath)?;
        let n = params.n_molecules;
        let sqrt_n = (n as f64).sqrt();
        let indices = params.mode_indices();
        let dk = params.dk();
        let k_parallel: Vec<f64> = indices.iter().map(|&j| j as f64 * dk).collect();
        let bins = indices
            .iter()
            .map(|&j| j.rem_euclid(n as i64) as usize)
            .collect();
        let photon_energy = k_parallel.iter().map(|&k| cavity_energy(k, params)).collect();
        let coupling = k_parallel
            .iter()
            .map(|&k| collective_coupling(k, params) / sqrt_n)
            .collect();
        let omega: Vec<f64> = modes.omega.iter().map(|w| w / HBAR).collect();
        let bath_coupling = modes
            .omega
            .iter()
            .zip(&modes.coupling)
            .map(|(w, c)| c * (2.0 * w).sqrt() / HBAR)
            .collect();
        let mut planner = FftPlanner::new();
        Ok(EhrenfestSystem {
            params: params.clone(),
            bins,
            k_parallel,
            photon_energy,
            coupling,
            omega,
            bath_coupling,
            reference_energy: params.omega0,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n_sites(&self) -> usize {
        self.params.n_molecules
    }

    pub fn n_cavity_modes(&self) -> usize {
        self.params.n_modes
    }

    pub fn n_bath_modes(&self) -> usize {
        self.omega.len()
    }

    pub fn k_parallel(&self) -> &[f64] {
        &self.k_parallel
    }

    pub fn photon_energies(&self) -> &[f64] {
        &self.photon_energy
    }

    /// Bath angular frequencies ω_α (fs⁻¹).
    pub fn bath_frequencies(&self) -> &[f64] {
        &self.omega
    }

    /// Classical bath couplings c̃_α (√eV/fs).
    pub fn bath_couplings(&self) -> &[f64] {
        &self.bath_coupling
    }

    pub(crate) fn bins(&self) -> &[usize] {
        &self.bins
    }

    /// In-place unnormalized inverse DFT of the workspace's second buffer.
    pub(crate) fn inverse_in_place(&self, ws: &mut Workspace) {
        self.inverse.process_with_scratch(&mut ws.fft_b, &mut ws.scratch);
    }

    /// Energy subtracted from H during propagation; only a global phase.
    pub fn reference_energy(&self) -> f64 {
        self.reference_energy
    }

    pub fn workspace(&self) -> Workspace {
        let n = self.n_sites();
        let scratch_len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        Workspace {
            fft_a: vec![ZERO; n],
            fft_b: vec![ZERO; n],
            scratch: vec![ZERO; scratch_len],
        }
    }

    /// Site energies ε_n = ħω₀ + Σ_α c̃_α R_{α,n}, written relative to the
    /// reference energy.
    pub fn site_energies_shifted(&self, nuclear: &NuclearPhaseSpace, out: &mut [f64]) {
        let nb = self.n_bath_modes();
        let base = self.params.omega0 - self.reference_energy;
        for (n, e) in out.iter_mut().enumerate() {
            let r = &nuclear.positions[n * nb..(n + 1) * nb];
            *e = base
                + self
                    .bath_coupling
                    .iter()
                    .zip(r)
                    .map(|(c, x)| c * x)
                    .sum::<f64>();
        }
    }

    /// out = (H − E_ref)·psi, with the site energies (already shifted)
    /// supplied by the caller.
    pub(crate) fn apply_shifted(
        &self,
        site_energy: &[f64],
        psi: &[Complex64],
        out: &mut [Complex64],
        ws: &mut Workspace,
    ) {
        let n = self.n_sites();
        let (psi_x, psi_a) = psi.split_at(n);
        let (out_x, out_a) = out.split_at_mut(n);

        // photon row: Σ_n e^{−ik x_n} c_n is the forward DFT.
        ws.fft_a.copy_from_slice(psi_x);
        self.forward.process_with_scratch(&mut ws.fft_a, &mut ws.scratch);

        // exciton row: Σ_k e^{+ik x_n} g_k c_k is the inverse DFT.
        ws.fft_b.fill(ZERO);
        for (m, &bin) in self.bins.iter().enumerate() {
            ws.fft_b[bin] = psi_a[m] * self.coupling[m];
        }
        self.inverse.process_with_scratch(&mut ws.fft_b, &mut ws.scratch);

        for (m, &bin) in self.bins.iter().enumerate() {
            out_a[m] = psi_a[m] * (self.photon_energy[m] - self.reference_energy)
                + ws.fft_a[bin] * self.coupling[m];
        }
        for i in 0..n {
            out_x[i] = psi_x[i] * site_energy[i] + ws.fft_b[i];
        }
    }

    /// H·psi at the given nuclear configuration.
    pub fn apply(
        &self,
        nuclear: &NuclearPhaseSpace,
        state: &SingleExcitationState,
    ) -> Result<SingleExcitationState> {
        self.check(state, nuclear)?;
        let mut eps = vec![0.0; self.n_sites()];
        self.site_energies_shifted(nuclear, &mut eps);
        let mut out = SingleExcitationState::zeros(self.n_sites(), self.n_cavity_modes());
        let mut ws = self.workspace();
        self.apply_shifted(&eps, state.as_slice(), out.as_mut_slice(), &mut ws);
        for (o, p) in out.as_mut_slice().iter_mut().zip(state.as_slice()) {
            *o += p * self.reference_energy;
        }
        Ok(out)
    }

    /// ⟨ψ|H − E_ref|ψ⟩ (real part).
    pub(crate) fn expectation_shifted(
        &self,
        site_energy: &[f64],
        psi: &[Complex64],
        hpsi: &mut [Complex64],
        ws: &mut Workspace,
    ) -> f64 {
        self.apply_shifted(site_energy, psi, hpsi, ws);
        psi.iter().zip(hpsi.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Σ (P² + ω²R²)/2 over all sites and modes (eV).
    pub fn bath_energy(&self, nuclear: &NuclearPhaseSpace) -> f64 {
        let nb = self.n_bath_modes();
        nuclear
            .positions
            .iter()
            .zip(&nuclear.momenta)
            .enumerate()
            .map(|(i, (r, p))| {
                let w = self.omega[i % nb];
                0.5 * (p * p + w * w * r * r)
            })
            .sum()
    }

    /// Total Ehrenfest energy ⟨ψ|H(R)|ψ⟩ + h_B(R, P) (eV), for a normalized ψ.
    pub fn total_energy(
        &self,
        state: &SingleExcitationState,
        nuclear: &NuclearPhaseSpace,
    ) -> Result<f64> {
        self.check(state, nuclear)?;
        let mut eps = vec![0.0; self.n_sites()];
        self.site_energies_shifted(nuclear, &mut eps);
        let mut hpsi = vec![ZERO; state.as_slice().len()];
        let mut ws = self.workspace();
        let e = self.expectation_shifted(&eps, state.as_slice(), &mut hpsi, &mut ws);
        Ok(e + self.reference_energy * state.norm_sqr() + self.bath_energy(nuclear))
    }

    /// Mean-field force F_{n,α} = −c̃_α|c_n|² − ω_α²R_{n,α}.
    pub fn forces(&self, exciton: &[Complex64], nuclear: &NuclearPhaseSpace, out: &mut [f64]) {
        let nb = self.n_bath_modes();
        for (n, c) in exciton.iter().enumerate() {
            let pop = c.norm_sqr();
            let r = &nuclear.positions[n * nb..(n + 1) * nb];
            let f = &mut out[n * nb..(n + 1) * nb];
            for a in 0..nb {
                let w = self.omega[a];
                f[a] = -self.bath_coupling[a] * pop - w * w * r[a];
            }
        }
    }

    pub(crate) fn check(
        &self,
        state: &SingleExcitationState,
        nuclear: &NuclearPhaseSpace,
    ) -> Result<()> {
        if state.n_sites() != self.n_sites() || state.n_modes() != self.n_cavity_modes() {
            return Err(Error::Shape(format!(
                "state has {} sites and {} modes, system has {} and {}",
                state.n_sites(),
                state.n_modes(),
                self.n_sites(),
                self.n_cavity_modes()
            )));
        }
        nuclear.check_shape(self.n_sites(), self.n_bath_modes())
    }
}

/// Dense Hermitian matrix in the basis (|E_0⟩ … |E_{N−1}⟩, |k_1⟩ … |k_M⟩),
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHamiltonian {
    pub dim: usize,
    pub entries: Vec<Complex64>,
}

impl DenseHamiltonian {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| {
                self.entries[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// Materialize the single-excitation Hamiltonian at nuclear configuration
/// `nuclear`. Intended for small systems and for checking the matrix-free
/// operator.
pub fn build_hq(
    nuclear: &NuclearPhaseSpace,
    params: &ModelParams,
    bath: &BathSpec,
) -> Result<DenseHamiltonian> {
    let system = EhrenfestSystem::new(params, bath)?;
    nuclear.check_shape(system.n_sites(), system.n_bath_modes())?;
    let n = system.n_sites();
    let dim = n + system.n_cavity_modes();
    let mut eps = vec![0.0; n];
    system.site_energies_shifted(nuclear, &mut eps);
    let mut entries = vec![ZERO; dim * dim];
    for (i, e) in eps.iter().enumerate() {
        entries[i * dim + i] = Complex64::new(e + system.reference_energy, 0.0);
    }
    for m in 0..system.n_cavity_modes() {
        let row = n + m;
        entries[row * dim + row] = Complex64::new(system.photon_energy[m], 0.0);
        for i in 0..n {
            // e^{-ik x_n} with k x_n = 2π j n / N, reduced mod N to keep the argument small
            let jn = (system.bins[m] * i) % n;
            let phase = 2.0 * std::f64::consts::PI * jn as f64 / n as f64;
            let h = Complex64::from_polar(system.coupling[m], -phase);
            entries[row * dim + i] = h;
            entries[i * dim + row] = h.conj();
        }
    }
    Ok(DenseHamiltonian { dim, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> (ModelParams, BathSpec) {
        let params = ModelParams {
            n_molecules: 24,
            n_modes: 5,
            spacing: 500.0,
            ..ModelParams::reference()
        };
        let bath = BathSpec {
            lambda: 0.01,
            omega_f: 0.006,
            n_modes: 3,
        };
        (params, bath)
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SingleExcitationState {
        let mut s = SingleExcitationState::zeros(n, m);
        for c in s.as_mut_slice() {
            *c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        s.normalize().unwrap();
        s
    }

    #[test]
    fn matrix_free_matches_dense() {
        let (params, bath) = small();
        let sys = EhrenfestSystem::new(&params, &bath).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut nuc = NuclearPhaseSpace::zeros(24, 3);
        for r in &mut nuc.positions {
            *r = rng.random_range(-5.0..5.0);
        }
        let h = build_hq(&nuc, &params, &bath).unwrap();
        let psi = random_state(&mut rng, 24, 5);
        let dense = h.mul_vec(psi.as_slice());
        let free = sys.apply(&nuc, &psi).unwrap();
        for (a, b) in dense.iter().zip(free.as_slice()) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn dense_is_hermitian() {
        let (params, bath) = small();
        let nuc = NuclearPhaseSpace::zeros(24, 3);
        let h = build_hq(&nuc, &params, &bath).unwrap();
        for r in 0..h.dim {
            for c in 0..h.dim {
                assert!((h.get(r, c) - h.get(c, r).conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn bright_state_couples_with_collective_strength() {
        let (params, bath) = small();
        let nuc = NuclearPhaseSpace::zeros(24, 3);
        let h = build_hq(&nuc, &params, &bath).unwrap();
        let n = params.n_molecules;
        let dk = params.dk();
        // mode index j = 1 sits in column n + 3
        let k = dk;
        let row = n + 3;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, x) in params.site_positions().iter().enumerate() {
            acc += h.get(row, i) * Complex64::from_polar(1.0 / (n as f64).sqrt(), k * x);
        }
        assert!((acc.re - collective_coupling(k, &params)).abs() < 1e-12);
        assert!(acc.im.abs() < 1e-12);
    }

    #[test]
    fn force_is_minus_gradient_of_energy() {
        let (params, bath) = small();
        let sys = EhrenfestSystem::new(&params, &bath).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = random_state(&mut rng, 24, 5);
        let mut nuc = NuclearPhaseSpace::zeros(24, 3);
        for (r, p) in nuc.positions.iter_mut().zip(nuc.momenta.iter_mut()) {
            *r = rng.random_range(-5.0..5.0);
            *p = rng.random_range(-0.1..0.1);
        }
        let mut f = vec![0.0; 72];
        sys.forces(psi.exciton(), &nuc, &mut f);
        for idx in [0usize, 7, 40, 71] {
            let h = 1e-4;
            let mut plus = nuc.clone();
            plus.positions[idx] += h;
            let mut minus = nuc.clone();
            minus.positions[idx] -= h;
            let grad = (sys.total_energy(&psi, &plus).unwrap()
                - sys.total_energy(&psi, &minus).unwrap())
                / (2.0 * h);
            assert!((f[idx] + grad).abs() < 1e-8 * (1.0 + grad.abs()), "{} {}", f[idx], grad);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let (params, bath) = small();
        let sys = EhrenfestSystem::new(&params, &bath).unwrap();
        let psi = SingleExcitationState::zeros(23, 5);
        let nuc = NuclearPhaseSpace::zeros(24, 3);
        assert!(matches!(sys.apply(&nuc, &psi), Err(Error::Shape(_))));
    }
}
