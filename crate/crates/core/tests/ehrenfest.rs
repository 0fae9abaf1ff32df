use nalgebra::DMatrix;
use num_complex::Complex64;
use polariton::ehrenfest::{
    build_hq, initialize_wavepacket, propagate_collect, propagate_trajectory, run_ensemble,
    sample_wigner, trajectory_rng, EhrenfestRun, EhrenfestSystem, EnsembleConfig,
    NuclearPhaseSpace, PropagationConfig, SingleExcitationState, WavepacketInit,
};
use polariton::greens::ThermalState;
use polariton::model::{polariton_point, BathSpec, ModelParams};
use polariton::units::HBAR;

fn small_params() -> ModelParams {
    ModelParams {
        n_molecules: 40,
        n_modes: 5,
        ..ModelParams::reference()
    }
}

fn bath(lambda: f64, n_modes: usize) -> BathSpec {
    BathSpec {
        lambda,
        omega_f: 0.006,
        n_modes,
    }
}

fn expected_levels(params: &ModelParams) -> Vec<f64> {
    let mut levels = Vec::new();
    for j in params.mode_indices() {
        let p = polariton_point(j as f64 * params.dk(), params);
        levels.push(p.energy_lp);
        levels.push(p.energy_up);
    }
    levels.extend(std::iter::repeat_n(params.omega0, params.n_molecules - params.n_modes));
    levels.sort_by(f64::total_cmp);
    levels
}

#[test]
fn dense_spectrum_at_rest_matches_polariton_bands() {
    let params = small_params();
    for lambda in [0.0, 0.01] {
        let nuclear = NuclearPhaseSpace::zeros(40, 3);
        let h = build_hq(&nuclear, &params, &bath(lambda, 3)).unwrap();
        let m = DMatrix::from_fn(h.dim, h.dim, |r, c| h.get(r, c));
        let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let expect = expected_levels(&params);
        assert_eq!(eig.len(), expect.len());
        for (a, b) in eig.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn zero_coupling_hamiltonian_ignores_nuclei() {
    let params = small_params();
    let b = bath(0.0, 4);
    let mut nuclear = NuclearPhaseSpace::zeros(40, 4);
    let h0 = build_hq(&nuclear, &params, &b).unwrap();
    nuclear.positions.iter_mut().enumerate().for_each(|(i, r)| *r = i as f64);
    let h1 = build_hq(&nuclear, &params, &b).unwrap();
    assert_eq!(h0, h1);
}

#[test]
fn autocorrelation_peaks_sit_at_band_energies() {
    let params = small_params();
    let b = bath(0.0, 1);
    let system = EhrenfestSystem::new(&params, &b).unwrap();
    let mut psi0 = SingleExcitationState::zeros(40, 5);
    // one excitation on a few sites plus every photon mode
    for (i, c) in psi0.as_mut_slice().iter_mut().enumerate() {
        if i < 3 || i >= 40 {
            *c = Complex64::new(1.0 + 0.1 * i as f64, 0.3);
        }
    }
    psi0.normalize().unwrap();
    let mut state = psi0.clone();
    let mut nuclear = NuclearPhaseSpace::zeros(40, 1);
    let cfg = PropagationConfig {
        dt_nuclear: 0.5,
        dt_electronic: 0.025,
        n_steps: 4000,
        snapshot_stride: 1,
    };
    let (frames, _) = propagate_collect(&system, &mut state, &mut nuclear, &cfg).unwrap();
    let total = frames.last().unwrap().0;
    let corr: Vec<(f64, Complex64)> = frames.iter().map(|(t, s)| (*t, psi0.inner(s))).collect();
    let spectrum = |e: f64| -> f64 {
        let w = (e - system.reference_energy()) / HBAR;
        corr.iter()
            .map(|(t, c)| {
                let hann = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * t / total).cos();
                c * Complex64::from_polar(hann, w * t)
            })
            .sum::<Complex64>()
            .norm()
    };
    let bands = expected_levels(&params);
    let (lo, hi) = (bands[0] - 0.05, bands[bands.len() - 1] + 0.05);
    let grid: Vec<f64> = (0..)
        .map(|i| lo + i as f64 * 2e-4)
        .take_while(|&e| e <= hi)
        .collect();
    let s: Vec<f64> = grid.iter().map(|&e| spectrum(e)).collect();
    let peaks: Vec<f64> = (1..s.len() - 1)
        .filter(|&i| s[i] > s[i - 1] && s[i] > s[i + 1] && s[i] > 0.01 * corr.len() as f64)
        .map(|i| grid[i])
        .collect();
    let resolution = 2.0 * std::f64::consts::PI * HBAR / total;

    // spectral weights of ψ₀ from dense diagonalization
    let h = build_hq(&NuclearPhaseSpace::zeros(40, 1), &params, &b).unwrap();
    let eig = DMatrix::from_fn(h.dim, h.dim, |r, c| h.get(r, c)).symmetric_eigen();
    let v0 = nalgebra::DVector::from_column_slice(psi0.as_slice());
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        let w = eig.eigenvectors.column(i).dotc(&v0).norm_sqr();
        match levels.iter_mut().find(|(l, _)| (l - e).abs() < 1e-9) {
            Some(entry) => entry.1 += w,
            None => levels.push((e, w)),
        }
    }
    for (l, _) in &levels {
        assert!(bands.iter().any(|b| (b - l).abs() < 1e-9));
    }
    for p in &peaks {
        let nearest = levels.iter().map(|(l, _)| (l - p).abs()).fold(f64::INFINITY, f64::min);
        assert!(nearest < resolution, "peak at {p} eV is {nearest} eV from any level");
    }
    for (l, w) in levels.iter().filter(|(_, w)| *w > 0.05) {
        let nearest = peaks.iter().map(|p| (l - p).abs()).fold(f64::INFINITY, f64::min);
        assert!(nearest < resolution, "level {l} eV (weight {w}) has no peak, nearest {nearest}");
    }
}

#[test]
fn lp_eigenstate_is_stationary_without_phonons() {
    let params = small_params();
    let system = EhrenfestSystem::new(&params, &bath(0.0, 2)).unwrap();
    let init = WavepacketInit {
        center_k: params.dk(),
        width_k: 1e-3 * params.dk(),
        center_x: Some(0.0),
    };
    let psi0 = initialize_wavepacket(&init, &params).unwrap().state;
    let mut state = psi0.clone();
    let mut nuclear = NuclearPhaseSpace::zeros(40, 2);
    let cfg = PropagationConfig {
        dt_nuclear: 2.5,
        dt_electronic: 0.025,
        n_steps: 400,
        snapshot_stride: 400,
    };
    let summary = propagate_trajectory(&system, &mut state, &mut nuclear, &cfg, |_| {}).unwrap();
    for (a, b) in psi0.as_slice().iter().zip(state.as_slice()) {
        assert!((a.norm() - b.norm()).abs() < 1e-10);
    }
    assert!(summary.norm_drift < 1e-9, "{}", summary.norm_drift);
    assert!(summary.energy_drift < 1e-9, "{}", summary.energy_drift);
}

#[test]
fn energy_is_conserved_from_a_cold_bath() {
    let params = ModelParams {
        n_molecules: 200,
        n_modes: 9,
        ..ModelParams::reference()
    };
    let system = EhrenfestSystem::new(&params, &bath(0.006, 35)).unwrap();
    let init = WavepacketInit::from_lp_energy(&params, 1.86, 0.01, None);
    let init = init.unwrap_or(WavepacketInit {
        center_k: 2.0 * params.dk(),
        width_k: params.dk(),
        center_x: None,
    });
    let mut state = initialize_wavepacket(&init, &params).unwrap().state;
    let mut nuclear = NuclearPhaseSpace::zeros(200, 35);
    let cfg = PropagationConfig {
        dt_nuclear: 2.5,
        dt_electronic: 0.025,
        n_steps: 200,
        snapshot_stride: 1,
    };
    let summary = propagate_trajectory(&system, &mut state, &mut nuclear, &cfg, |_| {}).unwrap();
    assert!(summary.energy_drift < 1e-4, "{}", summary.energy_drift);
    assert!(summary.norm_drift < 1e-8, "{}", summary.norm_drift);
}

#[test]
fn single_molecule_follows_displaced_oscillator() {
    let params = ModelParams {
        n_molecules: 1,
        n_modes: 1,
        gc_collective: 0.0,
        ..ModelParams::reference()
    };
    let b = bath(0.006, 1);
    let system = EhrenfestSystem::new(&params, &b).unwrap();
    let w = system.bath_frequencies()[0];
    let c = system.bath_couplings()[0];
    let mut state = SingleExcitationState::zeros(1, 1);
    state.exciton_mut()[0] = Complex64::new(1.0, 0.0);
    let mut nuclear = NuclearPhaseSpace::zeros(1, 1);
    let (r0, p0) = (3.0, 0.02);
    nuclear.positions[0] = r0;
    nuclear.momenta[0] = p0;
    let cfg = PropagationConfig {
        dt_nuclear: 0.1,
        dt_electronic: 0.1,
        n_steps: 10_000,
        snapshot_stride: 100,
    };
    let shift = -c / (w * w);
    let amp = (r0 - shift).hypot(p0 / w);
    let mut worst: f64 = 0.0;
    let mut pop_err: f64 = 0.0;
    propagate_trajectory(&system, &mut state, &mut nuclear, &cfg, |s| {
        let t = s.time;
        let r = shift + (r0 - shift) * (w * t).cos() + p0 / w * (w * t).sin();
        let p = -(r0 - shift) * w * (w * t).sin() + p0 * (w * t).cos();
        worst = worst
            .max((s.nuclear.positions[0] - r).abs() / amp)
            .max((s.nuclear.momenta[0] - p).abs() / (amp * w));
        pop_err = pop_err.max((s.state.exciton()[0].norm_sqr() - 1.0).abs());
    })
    .unwrap();
    assert!(worst < 1e-6, "{worst}");
    assert!(pop_err < 1e-12, "{pop_err}");
}

fn small_run(n_traj: usize) -> EhrenfestRun {
    let params = ModelParams {
        n_molecules: 120,
        n_modes: 7,
        ..ModelParams::reference()
    };
    EhrenfestRun {
        wavepacket: WavepacketInit {
            center_k: 2.0 * params.dk(),
            width_k: params.dk(),
            center_x: None,
        },
        params,
        bath: bath(0.006, 5),
        thermal: ThermalState::new(300.0).unwrap(),
        ensemble: EnsembleConfig {
            n_traj,
            base_seed: 42,
            t_max: 50.0,
            dt_electronic: 0.05,
            ..EnsembleConfig::default()
        },
    }
}

#[test]
fn one_trajectory_ensemble_equals_single_run() {
    let run = small_run(1);
    let ens = run_ensemble(&run).unwrap();
    let system = EhrenfestSystem::new(&run.params, &run.bath).unwrap();
    let mut nuclear = sample_wigner(&system, &run.thermal, &mut trajectory_rng(42, 0)).unwrap();
    let mut state = initialize_wavepacket(&run.wavepacket, &run.params).unwrap().state;
    let prop = run.ensemble.propagation().unwrap();
    let (frames, _) = propagate_collect(&system, &mut state, &mut nuclear, &prop).unwrap();
    assert_eq!(frames.len(), ens.density.len());
    for ((_, s), rho) in frames.iter().zip(&ens.density) {
        let direct = polariton::ehrenfest::real_space_density(s, &run.params).unwrap();
        assert_eq!(&direct, rho);
    }
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let run = small_run(6);
    let go = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&run).unwrap())
    };
    let a = go(1);
    let b = go(3);
    assert_eq!(a.density, b.density);
    assert_eq!(a.photon_fraction, b.photon_fraction);
    for frame in &a.density {
        let total: f64 = frame.iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert!(frame.iter().all(|&r| r >= 0.0));
    }
}

#[test]
fn ensemble_rejects_bad_config() {
    let mut run = small_run(0);
    assert!(run_ensemble(&run).is_err());
    run.ensemble.n_traj = 1;
    run.ensemble.dt_electronic = 5.0;
    assert!(run_ensemble(&run).is_err());
}
