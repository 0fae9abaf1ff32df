use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::EhrenfestSystem;
use super::propagate::{propagate_trajectory, PropagationConfig, TrajectorySummary};
use super::wavefront::{track_wavefront, DensitySeries, WavefrontOptions, WavefrontResult};
use super::wavepacket::{initialize_wavepacket, WavepacketInit};
use super::wigner::{sample_wigner, trajectory_rng};
use crate::error::{ensure, Error, Result};
use crate::greens::ThermalState;
use crate::model::{BathSpec, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub base_seed: u64,
    /// Nuclear step Δt_N (fs).
    pub dt_nuclear: f64,
    /// Electronic substep Δt_E (fs).
    pub dt_electronic: f64,
    /// Simulated time (fs).
    pub t_max: f64,
    /// Keep every `snapshot_stride`-th nuclear step.
    pub snapshot_stride: usize,
    pub wavefront: WavefrontOptions,
    /// Abort when more than this fraction of trajectories fail.
    pub max_failure_fraction: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_traj: 100,
            base_seed: 0,
            dt_nuclear: 2.5,
            dt_electronic: 0.025,
            t_max: 400.0,
            snapshot_stride: 1,
            wavefront: WavefrontOptions::default(),
            max_failure_fraction: 0.05,
        }
    }
}

impl EnsembleConfig {
    pub fn propagation(&self) -> Result<PropagationConfig> {
        ensure(self.t_max.is_finite() && self.t_max > 0.0, || {
            format!("t_max must be > 0, got {}", self.t_max)
        })?;
        ensure(self.n_traj >= 1, || "n_traj must be >= 1".to_string())?;
        ensure(
            (0.0..1.0).contains(&self.max_failure_fraction),
            || "max_failure_fraction must lie in [0, 1)".to_string(),
        )?;
        let cfg = PropagationConfig {
            dt_nuclear: self.dt_nuclear,
            dt_electronic: self.dt_electronic,
            n_steps: (self.t_max / self.dt_nuclear).round() as usize,
            snapshot_stride: self.snapshot_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything needed to run one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhrenfestRun {
    pub params: ModelParams,
    pub bath: BathSpec,
    pub thermal: ThermalState,
    pub wavepacket: WavepacketInit,
    pub ensemble: EnsembleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    /// RNG stream of this trajectory under the ensemble's base seed.
    pub stream: u64,
    pub summary: Option<TrajectorySummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub spacing: f64,
    /// Trajectory-averaged ρ(x_n, t), one frame per time.
    pub density: Vec<Vec<f64>>,
    /// Trajectory-averaged photon fraction per frame.
    pub photon_fraction: Vec<f64>,
    /// Wavefront trace and fit of the averaged density; `None` when the fit
    /// could not be made (see `wavefront_error`).
    pub wavefront: Option<WavefrontResult>,
    pub wavefront_error: Option<String>,
    pub n_traj: usize,
    pub n_failed: usize,
    pub base_seed: u64,
    pub trajectories: Vec<TrajectoryRecord>,
    /// k₀ and ⟨k⟩ of the initial packet (nm⁻¹).
    pub center_k: f64,
    pub mean_k: f64,
    /// Grid leakage of the initial packet.
    pub leakage: f64,
}

impl EnsembleResult {
    pub fn density_series(&self) -> DensitySeries {
        DensitySeries {
            times: self.times.clone(),
            spacing: self.spacing,
            frames: self.density.clone(),
        }
    }

    /// Re-track the averaged density with different options.
    pub fn retrack(&self, options: &WavefrontOptions) -> Result<WavefrontResult> {
        track_wavefront(&self.density_series(), options)
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.summaries().map(|s| s.norm_drift).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.summaries().map(|s| s.energy_drift).fold(0.0, f64::max)
    }

    fn summaries(&self) -> impl Iterator<Item = &TrajectorySummary> {
        self.trajectories.iter().filter_map(|t| t.summary.as_ref())
    }
}

struct TrajectoryOutput {
    density: Vec<f64>,
    photon: Vec<f64>,
    summary: TrajectorySummary,
}

/// Run `n_traj` Wigner-sampled trajectories from the same initial
/// wavepacket and average their densities.
///
/// Trajectory `i` draws its phonons from `trajectory_rng(base_seed, i)`.
/// Trajectories run in parallel but are reduced strictly in index order, so
/// the result does not depend on the number of worker threads.
pub fn run_ensemble(run: &EhrenfestRun) -> Result<EnsembleResult> {
    let prop = run.ensemble.propagation()?;
    run.thermal.validate()?;
    let system = EhrenfestSystem::new(&run.params, &run.bath)?;
    let packet = initialize_wavepacket(&run.wavepacket, &run.params)?;
    let n = system.n_sites();
    let n_frames = prop.n_snapshots();
    let n_traj = run.ensemble.n_traj;

    let run_one = |index: usize| -> Result<TrajectoryOutput> {
        let mut rng = trajectory_rng(run.ensemble.base_seed, index as u64);
        let mut nuclear = sample_wigner(&system, &run.thermal, &mut rng)?;
        let mut state = packet.state.clone();
        let mut density = vec![0.0; n * n_frames];
        let mut photon = vec![0.0; n_frames];
        let mut ws = system.workspace();
        let mut frame = 0;
        let summary = propagate_trajectory(&system, &mut state, &mut nuclear, &prop, |snap| {
            system.density_into(snap.state, &mut density[frame * n..(frame + 1) * n], &mut ws);
            photon[frame] = snap.state.photon_population();
            frame += 1;
        })?;
        Ok(TrajectoryOutput {
            density,
            photon,
            summary,
        })
    };

    let mut sum_density = vec![0.0; n * n_frames];
    let mut sum_photon = vec![0.0; n_frames];
    let mut records = Vec::with_capacity(n_traj);
    let mut n_ok = 0usize;
    let chunk = (2 * rayon::current_num_threads()).max(4);
    let mut start = 0;
    while start < n_traj {
        let end = (start + chunk).min(n_traj);
        let outputs: Vec<Result<TrajectoryOutput>> = (start..end).into_par_iter().map(run_one).collect();
        for (offset, out) in outputs.into_iter().enumerate() {
            let index = start + offset;
            match out {
                Ok(o) => {
                    for (s, d) in sum_density.iter_mut().zip(&o.density) {
                        *s += d;
                    }
                    for (s, p) in sum_photon.iter_mut().zip(&o.photon) {
                        *s += p;
                    }
                    n_ok += 1;
                    records.push(TrajectoryRecord {
                        index,
                        stream: index as u64,
                        summary: Some(o.summary),
                        error: None,
                    });
                }
                Err(e) => {
                    log::warn!("trajectory {index} failed: {e}");
                    records.push(TrajectoryRecord {
                        index,
                        stream: index as u64,
                        summary: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
        start = end;
    }

    let n_failed = n_traj - n_ok;
    if n_ok == 0 || n_failed as f64 > run.ensemble.max_failure_fraction * n_traj as f64 {
        let first = records
            .iter()
            .find_map(|r| r.error.clone())
            .unwrap_or_default();
        return Err(Error::EnsembleAborted {
            failed: n_failed,
            total: n_traj,
            first,
        });
    }

    let scale = 1.0 / n_ok as f64;
    let density: Vec<Vec<f64>> = sum_density
        .chunks(n)
        .map(|f| f.iter().map(|x| x * scale).collect())
        .collect();
    let photon_fraction = sum_photon.iter().map(|x| x * scale).collect();
    let times = (0..n_frames)
        .map(|i| (i * prop.snapshot_stride) as f64 * prop.dt_nuclear)
        .collect();

    let mut result = EnsembleResult {
        times,
        spacing: run.params.spacing,
        density,
        photon_fraction,
        wavefront: None,
        wavefront_error: None,
        n_traj,
        n_failed,
        base_seed: run.ensemble.base_seed,
        trajectories: records,
        center_k: run.wavepacket.center_k,
        mean_k: packet.mean_k,
        leakage: packet.leakage,
    };
    match result.retrack(&run.ensemble.wavefront) {
        Ok(w) => result.wavefront = Some(w),
        Err(e) => {
            log::warn!("wavefront fit failed: {e}");
            result.wavefront_error = Some(e.to_string());
        }
    }
    Ok(result)
}
