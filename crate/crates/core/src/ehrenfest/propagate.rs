use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{EhrenfestSystem, Workspace};
use super::state::{NuclearPhaseSpace, SingleExcitationState};
use crate::error::{ensure, Error, Result};
use crate::units::HBAR;

/// Time stepping of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    /// Velocity-Verlet step Δt_N (fs).
    pub dt_nuclear: f64,
    /// Target RK4 substep Δt_E (fs); rounded so that it divides Δt_N.
    pub dt_electronic: f64,
    pub n_steps: usize,
    /// Observe every `snapshot_stride` nuclear steps (step 0 included).
    pub snapshot_stride: usize,
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.dt_nuclear.is_finite() && self.dt_nuclear > 0.0, || {
            format!("dt_nuclear must be > 0, got {}", self.dt_nuclear)
        })?;
        ensure(
            self.dt_electronic.is_finite()
                && self.dt_electronic > 0.0
                && self.dt_electronic <= self.dt_nuclear,
            || {
                format!(
                    "dt_electronic must lie in (0, dt_nuclear], got {}",
                    self.dt_electronic
                )
            },
        )?;
        ensure(self.snapshot_stride >= 1, || {
            "snapshot_stride must be >= 1".to_string()
        })?;
        Ok(())
    }

    /// Number of RK4 substeps per nuclear step.
    pub fn substeps(&self) -> usize {
        ((self.dt_nuclear / self.dt_electronic) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn n_snapshots(&self) -> usize {
        self.n_steps / self.snapshot_stride + 1
    }
}

/// View handed to the observer at every snapshot.
#[derive(Debug)]
pub struct Snapshot<'a> {
    pub step: usize,
    /// Time (fs).
    pub time: f64,
    pub state: &'a SingleExcitationState,
    pub nuclear: &'a NuclearPhaseSpace,
    /// Total energy ⟨H⟩ + h_B (eV).
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub n_steps: usize,
    /// max_t |⟨ψ|ψ⟩ − ⟨ψ₀|ψ₀⟩|.
    pub norm_drift: f64,
    /// max_t |E(t) − E(0)| (eV).
    pub energy_drift: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
}

struct Rk4Buffers {
    eps: Vec<f64>,
    k: Vec<Complex64>,
    tmp: Vec<Complex64>,
    acc: Vec<Complex64>,
    ws: Workspace,
}

impl Rk4Buffers {
    fn new(system: &EhrenfestSystem, dim: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Rk4Buffers {
            eps: vec![0.0; system.n_sites()],
            k: vec![zero; dim],
            tmp: vec![zero; dim],
            acc: vec![zero; dim],
            ws: system.workspace(),
        }
    }

    /// One classical RK4 step of iħ dψ/dt = (H − E_ref)ψ with frozen site energies.
    fn step(&mut self, system: &EhrenfestSystem, psi: &mut [Complex64], dt: f64) {
        let f = Complex64::new(0.0, -dt / HBAR);
        let Rk4Buffers {
            eps,
            k,
            tmp,
            acc,
            ws,
        } = self;
        acc.copy_from_slice(psi);
        system.apply_shifted(eps, psi, k, ws);
        for i in 0..psi.len() {
            let d = f * k[i];
            acc[i] += d / 6.0;
            tmp[i] = psi[i] + d * 0.5;
        }
        system.apply_shifted(eps, tmp, k, ws);
        for i in 0..psi.len() {
            let d = f * k[i];
            acc[i] += d / 3.0;
            tmp[i] = psi[i] + d * 0.5;
        }
        system.apply_shifted(eps, tmp, k, ws);
        for i in 0..psi.len() {
            let d = f * k[i];
            acc[i] += d / 3.0;
            tmp[i] = psi[i] + d;
        }
        system.apply_shifted(eps, tmp, k, ws);
        for i in 0..psi.len() {
            psi[i] = acc[i] + f * k[i] / 6.0;
        }
    }

    fn energy(&mut self, system: &EhrenfestSystem, psi: &[Complex64], nuclear: &NuclearPhaseSpace) -> f64 {
        system.site_energies_shifted(nuclear, &mut self.eps);
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let e = system.expectation_shifted(&self.eps, psi, &mut self.k, &mut self.ws);
        e + system.reference_energy() * norm + system.bath_energy(nuclear)
    }
}

/// Propagate one trajectory in place. `observer` sees step 0 and every
/// `snapshot_stride`-th step after it.
///
/// Each nuclear step is velocity Verlet; the electrons are advanced with RK4
/// substeps under the Hamiltonian frozen at the midpoint geometry.
pub fn propagate_trajectory<F>(
    system: &EhrenfestSystem,
    state: &mut SingleExcitationState,
    nuclear: &mut NuclearPhaseSpace,
    config: &PropagationConfig,
    mut observer: F,
) -> Result<TrajectorySummary>
where
    F: FnMut(&Snapshot<'_>),
{
    config.validate()?;
    system.check(state, nuclear)?;
    if !state.is_finite() || !nuclear.is_finite() {
        return Err(Error::Numerical("non-finite initial condition".into()));
    }
    let dt = config.dt_nuclear;
    let n_sub = config.substeps();
    let dt_e = dt / n_sub as f64;
    let mut buf = Rk4Buffers::new(system, state.as_slice().len());
    let mut force = vec![0.0; nuclear.positions.len()];
    let mut mid = nuclear.positions.clone();

    let norm0 = state.norm_sqr();
    let e0 = buf.energy(system, state.as_slice(), nuclear);
    let mut summary = TrajectorySummary {
        n_steps: config.n_steps,
        norm_drift: 0.0,
        energy_drift: 0.0,
        initial_energy: e0,
        final_energy: e0,
    };
    observer(&Snapshot {
        step: 0,
        time: 0.0,
        state,
        nuclear,
        energy: e0,
    });

    system.forces(state.exciton(), nuclear, &mut force);
    for step in 1..=config.n_steps {
        for ((p, r), (f, m)) in nuclear
            .momenta
            .iter_mut()
            .zip(nuclear.positions.iter_mut())
            .zip(force.iter().zip(mid.iter_mut()))
        {
            *p += 0.5 * dt * f;
            *m = *r + 0.5 * dt * *p;
            *r += dt * *p;
        }

        std::mem::swap(&mut nuclear.positions, &mut mid);
        system.site_energies_shifted(nuclear, &mut buf.eps);
        std::mem::swap(&mut nuclear.positions, &mut mid);
        for _ in 0..n_sub {
            buf.step(system, state.as_mut_slice(), dt_e);
        }

        system.forces(state.exciton(), nuclear, &mut force);
        for (p, f) in nuclear.momenta.iter_mut().zip(&force) {
            *p += 0.5 * dt * f;
        }

        let energy = buf.energy(system, state.as_slice(), nuclear);
        if !energy.is_finite() || !state.is_finite() || !nuclear.is_finite() {
            return Err(Error::Numerical(format!(
                "trajectory diverged at step {step} (t = {} fs)",
                step as f64 * dt
            )));
        }
        summary.norm_drift = summary.norm_drift.max((state.norm_sqr() - norm0).abs());
        summary.energy_drift = summary.energy_drift.max((energy - e0).abs());
        summary.final_energy = energy;
        if step % config.snapshot_stride == 0 {
            observer(&Snapshot {
                step,
                time: step as f64 * dt,
                state,
                nuclear,
                energy,
            });
        }
    }
    Ok(summary)
}

/// Like [`propagate_trajectory`] but returns copies of the electronic state
/// at every snapshot as `(time, state)`.
pub fn propagate_collect(
    system: &EhrenfestSystem,
    state: &mut SingleExcitationState,
    nuclear: &mut NuclearPhaseSpace,
    config: &PropagationConfig,
) -> Result<(Vec<(f64, SingleExcitationState)>, TrajectorySummary)> {
    let mut frames = Vec::with_capacity(config.n_snapshots());
    let summary = propagate_trajectory(system, state, nuclear, config, |s| {
        frames.push((s.time, s.state.clone()))
    })?;
    Ok((frames, summary))
}
