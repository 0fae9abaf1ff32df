use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bose_einstein, dark_kernel, xi_im, xi_re, SelfEnergyConfig, ThermalState};
use crate::error::{Error, Result};
use crate::model::{
    bare_group_velocity, polariton_point, BandPoint, Branch, DiscretizedBath, KGrid, ModelParams,
};
use crate::units::HBAR;

const SC_TOLERANCE: f64 = 1e-9;
const SC_MAX_ITER: usize = 200;
const SC_MIXING: f64 = 0.5;

/// Renormalization of one branch at one wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRenormalization {
    /// Re Σ (eV).
    pub correction: f64,
    /// E⁽²⁾ = ε + Re Σ (eV).
    pub energy: f64,
    /// Im Σ (eV, ≤ 0).
    pub linewidth: f64,
    /// dε/dk_∥ / ħ (nm/fs).
    pub vg_bare: f64,
    /// dE⁽²⁾/dk_∥ / ħ (nm/fs).
    pub vg_renormalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormalizedBandPoint {
    pub base: BandPoint,
    pub upper: BranchRenormalization,
    pub lower: BranchRenormalization,
}

impl RenormalizedBandPoint {
    pub fn branch(&self, branch: Branch) -> &BranchRenormalization {
        match branch {
            Branch::Upper => &self.upper,
            Branch::Lower => &self.lower,
        }
    }
}

/// An intermediate level ν in the self-energy sum: energy, matter fraction
/// ζ²_ν, and its weight (number of such states divided by N).
#[derive(Debug, Clone, Copy)]
struct Intermediate {
    energy: f64,
    zeta2: f64,
    weight: f64,
}

/// First-order self-energy evaluator for fixed model, bath and temperature.
#[derive(Debug, Clone)]
pub struct SelfEnergy {
    params: ModelParams,
    cfg: SelfEnergyConfig,
    omega: Vec<f64>,
    /// 2c_α², the factor 2 coming from the ±q degeneracy of the phonon modes.
    strength: Vec<f64>,
    occupation: Vec<f64>,
    intermediates: Vec<Intermediate>,
}

impl SelfEnergy {
    pub fn new(
        params: &ModelParams,
        bath: &DiscretizedBath,
        thermal: &ThermalState,
        cfg: &SelfEnergyConfig,
    ) -> Result<Self> {
        params.validate()?;
        thermal.validate()?;
        cfg.validate()?;
        if bath.is_empty() {
            return Err(Error::Config("self-energy needs a non-empty bath".into()));
        }
        let occupation = bath
            .omega
            .iter()
            .map(|&w| bose_einstein(w, thermal))
            .collect::<Result<Vec<_>>>()?;
        let strength = bath.coupling.iter().map(|c| 2.0 * c * c).collect();

        let intermediates = if cfg.dark_only {
            Vec::new()
        } else {
            let n = params.n_molecules as f64;
            let mut levels = Vec::with_capacity(2 * params.n_modes + 1);
            for &k in &KGrid::cavity(params).k_parallel {
                let p = polariton_point(k, params);
                if cfg.include.upper {
                    levels.push(Intermediate {
                        energy: p.energy_up,
                        zeta2: p.hopfield_up,
                        weight: 1.0 / n,
                    });
                }
                if cfg.include.lower {
                    levels.push(Intermediate {
                        energy: p.energy_lp,
                        zeta2: p.hopfield_lp,
                        weight: 1.0 / n,
                    });
                }
            }
            if cfg.include.dark {
                // The N − M dark states are exactly degenerate at ħω₀.
                levels.push(Intermediate {
                    energy: params.omega0,
                    zeta2: 1.0,
                    weight: (params.n_molecules - params.n_modes) as f64 / n,
                });
            }
            levels
        };

        Ok(SelfEnergy {
            params: params.clone(),
            cfg: cfg.clone(),
            omega: bath.omega.clone(),
            strength,
            occupation,
            intermediates,
        })
    }

    pub fn config(&self) -> &SelfEnergyConfig {
        &self.cfg
    }

    /// Σ_μk(E) as (Re, Im) in eV, with E the energy at which it is evaluated.
    pub fn sigma(&self, point: &BandPoint, branch: Branch, energy: f64) -> (f64, f64) {
        let eta = self.cfg.eta;
        let modes = self
            .omega
            .iter()
            .zip(&self.strength)
            .zip(&self.occupation);
        let (re, im) = if self.cfg.dark_only {
            let d = energy - self.params.omega0;
            let mut re = 0.0;
            let mut im = 0.0;
            for ((&w, &s), &n) in modes {
                re += s * match branch {
                    Branch::Lower => dark_kernel(-d, w, n, eta),
                    Branch::Upper => xi_re(d, w, n, eta),
                };
                im += s * xi_im(d, w, n, eta);
            }
            (re, im)
        } else {
            let mut re = 0.0;
            let mut im = 0.0;
            for lvl in &self.intermediates {
                let d = energy - lvl.energy;
                let (mut r, mut i) = (0.0, 0.0);
                for ((&w, &s), &n) in modes.clone() {
                    r += s * xi_re(d, w, n, eta);
                    i += s * xi_im(d, w, n, eta);
                }
                re += lvl.weight * lvl.zeta2 * r;
                im += lvl.weight * lvl.zeta2 * i;
            }
            (re, im)
        };
        let zeta2 = point.matter_fraction(branch);
        (zeta2 * re, zeta2 * im)
    }

    /// Renormalized energy of a branch at `k_parallel`: returns
    /// (Re Σ, E⁽²⁾, Im Σ).
    pub fn renormalize(&self, k_parallel: f64, branch: Branch) -> Result<(f64, f64, f64)> {
        let point = polariton_point(k_parallel, &self.params);
        let bare = point.energy(branch);
        if !self.cfg.self_consistent {
            let (re, im) = self.sigma(&point, branch, bare);
            return Ok((re, bare + re, im));
        }
        let mut energy = bare;
        for _ in 0..SC_MAX_ITER {
            let (re, _) = self.sigma(&point, branch, energy);
            let next = (1.0 - SC_MIXING) * energy + SC_MIXING * (bare + re);
            if !next.is_finite() {
                return Err(Error::Numerical(format!(
                    "self-consistent energy diverged at k = {k_parallel}"
                )));
            }
            let done = (next - energy).abs() < SC_TOLERANCE;
            energy = next;
            if done {
                let (re, im) = self.sigma(&point, branch, energy);
                return Ok((re, bare + re, im));
            }
        }
        Err(Error::Numerical(format!(
            "self-consistent energy did not converge in {SC_MAX_ITER} iterations at k = {k_parallel}"
        )))
    }

    /// Renormalized group velocity at a single wavevector: the analytic bare
    /// velocity plus [`SelfEnergy::velocity_shift`].
    pub fn group_velocity(&self, k_parallel: f64, branch: Branch) -> Result<f64> {
        Ok(bare_group_velocity(k_parallel, branch, &self.params)
            + self.velocity_shift(k_parallel, branch)?)
    }

    /// Δv_g = (1/ħ)·d(Re Σ)/dk_∥ by central difference with the configured
    /// step (nm/fs).
    pub fn velocity_shift(&self, k_parallel: f64, branch: Branch) -> Result<f64> {
        let h = self.cfg.derivative_step;
        let (plus, _, _) = self.renormalize(k_parallel + h, branch)?;
        let (minus, _, _) = self.renormalize(k_parallel - h, branch)?;
        Ok((plus - minus) / (2.0 * h * HBAR))
    }

    fn point(&self, k: f64) -> Result<RenormalizedBandPoint> {
        let base = polariton_point(k, &self.params);
        let branch = |b: Branch| -> Result<BranchRenormalization> {
            let (correction, energy, linewidth) = self.renormalize(k, b)?;
            let vg_bare = bare_group_velocity(k, b, &self.params);
            Ok(BranchRenormalization {
                correction,
                energy,
                linewidth,
                vg_bare,
                vg_renormalized: f64::NAN,
            })
        };
        Ok(RenormalizedBandPoint {
            base,
            upper: branch(Branch::Upper)?,
            lower: branch(Branch::Lower)?,
        })
    }
}

/// Evaluates the renormalized upper and lower bands on `grid`.
///
/// Group velocities come from central differences on the grid when it is
/// uniform with at least two points, and from pointwise differences with
/// `cfg.derivative_step` otherwise. Points are computed in parallel; the
/// output is ordered as the grid.
pub fn renormalized_band(
    grid: &KGrid,
    params: &ModelParams,
    bath: &DiscretizedBath,
    thermal: &ThermalState,
    cfg: &SelfEnergyConfig,
) -> Result<Vec<RenormalizedBandPoint>> {
    if grid.is_empty() {
        return Err(Error::Config("empty k grid".into()));
    }
    let se = SelfEnergy::new(params, bath, thermal, cfg)?;
    let mut points = grid
        .k_parallel
        .par_iter()
        .map(|&k| se.point(k))
        .collect::<Result<Vec<_>>>()?;

    if grid.len() >= 2 && is_uniform(&grid.k_parallel) {
        let velocities = renormalized_vg(&points)?;
        for (p, (up, lp)) in points.iter_mut().zip(velocities) {
            p.upper.vg_renormalized = up;
            p.lower.vg_renormalized = lp;
        }
    } else {
        for p in &mut points {
            let k = p.base.k_parallel;
            p.upper.vg_renormalized = se.group_velocity(k, Branch::Upper)?;
            p.lower.vg_renormalized = se.group_velocity(k, Branch::Lower)?;
        }
    }
    Ok(points)
}

/// (1/ħ)·dE⁽²⁾/dk_∥ for both branches on a uniform curve, as the analytic
/// bare velocity plus the grid derivative of Re Σ, returned as
/// `(upper, lower)` pairs. Interior points use central differences, the two
/// ends second-order one-sided differences.
pub fn renormalized_vg(curve: &[RenormalizedBandPoint]) -> Result<Vec<(f64, f64)>> {
    if curve.len() < 2 {
        return Err(Error::InvalidParameter(
            "group velocity needs at least two band points".into(),
        ));
    }
    let ks: Vec<f64> = curve.iter().map(|p| p.base.k_parallel).collect();
    if !is_uniform(&ks) {
        return Err(Error::InvalidParameter(
            "band curve must be sorted with uniform k spacing".into(),
        ));
    }
    let h = ks[1] - ks[0];
    let n = curve.len();
    let diff = |f: &dyn Fn(&RenormalizedBandPoint) -> f64, i: usize| -> f64 {
        let e = |j: usize| f(&curve[j]);
        let d = if n == 2 {
            e(1) - e(0)
        } else if i == 0 {
            0.5 * (-3.0 * e(0) + 4.0 * e(1) - e(2))
        } else if i == n - 1 {
            0.5 * (3.0 * e(n - 1) - 4.0 * e(n - 2) + e(n - 3))
        } else {
            0.5 * (e(i + 1) - e(i - 1))
        };
        d / (h * HBAR)
    };
    Ok((0..n)
        .map(|i| {
            (
                curve[i].upper.vg_bare + diff(&|p| p.upper.correction, i),
                curve[i].lower.vg_bare + diff(&|p| p.lower.correction, i),
            )
        })
        .collect())
}

fn is_uniform(ks: &[f64]) -> bool {
    if ks.len() < 2 {
        return false;
    }
    let h = ks[1] - ks[0];
    h > 0.0 && ks.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{discretize_bath, lp_wavevector_for_energy, BathSpec};
    use approx::assert_relative_eq;

    fn bath(lambda: f64, n: usize) -> DiscretizedBath {
        discretize_bath(&BathSpec {
            lambda,
            omega_f: 0.006,
            n_modes: n,
        })
        .unwrap()
    }

    fn room() -> ThermalState {
        ThermalState::new(300.0).unwrap()
    }

    #[test]
    fn zero_coupling_leaves_band_untouched() {
        let p = ModelParams::reference();
        let grid = KGrid::dense(0.0, 0.006, 61).unwrap();
        let cfg = SelfEnergyConfig::default();
        let band = renormalized_band(&grid, &p, &bath(0.0, 200), &room(), &cfg).unwrap();
        for pt in &band {
            for b in [Branch::Upper, Branch::Lower] {
                let r = pt.branch(b);
                assert_eq!(r.correction, 0.0);
                assert_eq!(r.linewidth, 0.0);
                assert_eq!(r.energy, pt.base.energy(b));
            }
        }
        for pt in &band {
            assert_eq!(pt.lower.vg_renormalized, pt.lower.vg_bare);
        }
    }

    #[test]
    fn correction_is_linear_in_lambda() {
        let p = ModelParams::reference();
        let cfg = SelfEnergyConfig::default();
        let a = SelfEnergy::new(&p, &bath(0.006, 500), &room(), &cfg).unwrap();
        let b = SelfEnergy::new(&p, &bath(0.012, 500), &room(), &cfg).unwrap();
        for k in [0.0, 0.002, 0.0031, 0.005] {
            for br in [Branch::Upper, Branch::Lower] {
                let (ca, _, _) = a.renormalize(k, br).unwrap();
                let (cb, _, _) = b.renormalize(k, br).unwrap();
                assert_relative_eq!(cb, 2.0 * ca, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sign_structure_in_large_gap_regime() {
        let p = ModelParams::reference();
        let cfg = SelfEnergyConfig::default();
        let se = SelfEnergy::new(&p, &bath(0.006, 2000), &room(), &cfg).unwrap();
        let k_max = lp_wavevector_for_energy(1.90, &p).unwrap();
        for i in 0..=20 {
            let k = k_max * i as f64 / 20.0;
            let point = polariton_point(k, &p);
            assert!(point.dark_gap >= 0.06 - 1e-12);
            assert!(se.renormalize(k, Branch::Lower).unwrap().0 <= 0.0);
            assert!(se.renormalize(k, Branch::Upper).unwrap().0 >= 0.0);
        }
    }

    #[test]
    fn dark_only_factorizes_on_matter_fraction() {
        // Re Σ_LP / |C_k|² depends on k only through the dark gap.
        let p = ModelParams::reference();
        let b = bath(0.006, 400);
        let th = room();
        let cfg = SelfEnergyConfig::default();
        let se = SelfEnergy::new(&p, &b, &th, &cfg).unwrap();
        for k in [0.001, 0.003, 0.0045] {
            let point = polariton_point(k, &p);
            let (re, _, _) = se.renormalize(k, Branch::Lower).unwrap();
            let direct: f64 = b
                .omega
                .iter()
                .zip(&b.coupling)
                .map(|(w, c)| {
                    let n = bose_einstein(*w, &th).unwrap();
                    2.0 * c * c * dark_kernel(point.dark_gap, *w, n, cfg.eta)
                })
                .sum();
            assert_relative_eq!(re / point.hopfield_lp, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn renormalized_lp_is_slower() {
        let p = ModelParams::reference();
        let grid = KGrid::dense(0.0005, 0.0045, 41).unwrap();
        let band = renormalized_band(
            &grid,
            &p,
            &bath(0.006, 2000),
            &room(),
            &SelfEnergyConfig::default(),
        )
        .unwrap();
        for pt in &band {
            assert!(pt.lower.vg_renormalized < pt.lower.vg_bare, "{pt:?}");
        }
    }

    #[test]
    fn velocity_matches_difference_of_renormalized_energy() {
        let p = ModelParams::reference();
        let b = bath(0.006, 1000);
        let se = SelfEnergy::new(&p, &b, &room(), &SelfEnergyConfig::default()).unwrap();
        for k in [0.0015, 0.0031, 0.0042] {
            let h = 1e-6;
            let (_, up, _) = se.renormalize(k + h, Branch::Lower).unwrap();
            let (_, dn, _) = se.renormalize(k - h, Branch::Lower).unwrap();
            let fd = (up - dn) / (2.0 * h * HBAR);
            let v = se.group_velocity(k, Branch::Lower).unwrap();
            assert_relative_eq!(v, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn pointwise_and_grid_velocities_agree() {
        let p = ModelParams::reference();
        let b = bath(0.006, 1000);
        let cfg = SelfEnergyConfig::default();
        let grid = KGrid::dense(0.0028, 0.0034, 601).unwrap();
        let band = renormalized_band(&grid, &p, &b, &room(), &cfg).unwrap();
        let se = SelfEnergy::new(&p, &b, &room(), &cfg).unwrap();
        let mid = &band[300];
        let v = se.group_velocity(mid.base.k_parallel, Branch::Lower).unwrap();
        assert_relative_eq!(mid.lower.vg_renormalized, v, max_relative = 1e-6);
        // A single-point grid falls back to the pointwise derivative.
        let one = KGrid::from_points(vec![mid.base.k_parallel]).unwrap();
        let single = renormalized_band(&one, &p, &b, &room(), &cfg).unwrap();
        assert_relative_eq!(single[0].lower.vg_renormalized, v, max_relative = 1e-12);
    }

    #[test]
    fn self_consistent_close_to_on_shell() {
        let p = ModelParams::reference();
        let b = bath(0.006, 500);
        let mut cfg = SelfEnergyConfig::default();
        let on = SelfEnergy::new(&p, &b, &room(), &cfg).unwrap();
        cfg.self_consistent = true;
        let sc = SelfEnergy::new(&p, &b, &room(), &cfg).unwrap();
        let k = 0.0031;
        let (c_on, _, _) = on.renormalize(k, Branch::Lower).unwrap();
        let (c_sc, e_sc, _) = sc.renormalize(k, Branch::Lower).unwrap();
        // Fixed point: E = ε + Re Σ(E).
        let point = polariton_point(k, &p);
        let (re, _) = sc.sigma(&point, Branch::Lower, e_sc);
        assert!((e_sc - point.energy_lp - re).abs() < 1e-8);
        assert!((c_sc - c_on).abs() < 0.1 * c_on.abs());
    }

    #[test]
    fn configuration_errors() {
        let p = ModelParams::reference();
        let empty = DiscretizedBath {
            omega: vec![],
            coupling: vec![],
        };
        let cfg = SelfEnergyConfig::default();
        assert!(matches!(
            SelfEnergy::new(&p, &empty, &room(), &cfg),
            Err(Error::Config(_))
        ));
        let mut cfg = SelfEnergyConfig::default();
        cfg.dark_only = false;
        cfg.include = super::super::BranchSet {
            upper: false,
            lower: false,
            dark: false,
        };
        assert!(matches!(
            SelfEnergy::new(&p, &bath(0.006, 10), &room(), &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn vg_needs_two_uniform_points() {
        let p = ModelParams::reference();
        let grid = KGrid::from_points(vec![0.001, 0.002, 0.0035]).unwrap();
        let cfg = SelfEnergyConfig::default();
        let band = renormalized_band(&grid, &p, &bath(0.006, 50), &room(), &cfg).unwrap();
        assert!(renormalized_vg(&band).is_err());
        assert!(renormalized_vg(&band[..1]).is_err());
        // Non-uniform grids still get pointwise velocities.
        assert!(band.iter().all(|pt| pt.lower.vg_renormalized.is_finite()));
    }
}
