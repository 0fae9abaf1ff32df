//! The generalized Holstein-Tavis-Cummings model: parameters, the cavity
//! `k`-grid, the polariton eigenstructure and the discretized phonon bath.
//!
//! Everything here is a pure function of its arguments.

mod band;
mod bath;

pub use band::{
    bare_group_velocity, cavity_energy, collective_coupling, lp_wavevector_for_energy,
    polariton_point, BandPoint,
};
pub use bath::{discretize_bath, BathSpec, DiscretizedBath};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ensure, Error, Result};
use crate::units::HBAR_C;

/// Polariton branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

/// Parameters of the light-matter system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Exciton energy ħω₀ (eV).
    pub omega0: f64,
    /// Cavity photon energy at normal incidence ħω_c (eV).
    pub omega_c: f64,
    /// Collective light-matter coupling √N·g_c (eV).
    pub gc_collective: f64,
    /// Number of molecules N.
    pub n_molecules: usize,
    /// Number of cavity modes M (odd).
    pub n_modes: usize,
    /// Intermolecular spacing L (nm).
    pub spacing: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl ModelParams {
    /// ħω₀ = 1.96 eV, ħω_c = 1.90 eV, √N g_c = 120 meV, at the desk-scale
    /// lattice N = 2000, M = 57, L = 20 nm.
    pub fn reference() -> Self {
        ModelParams {
            omega0: 1.96,
            omega_c: 1.90,
            gc_collective: 0.120,
            n_molecules: 2000,
            n_modes: 57,
            spacing: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.omega0.is_finite() && self.omega0 > 0.0, || {
            format!("omega0 must be > 0, got {}", self.omega0)
        })?;
        ensure(self.omega_c.is_finite() && self.omega_c > 0.0, || {
            format!("omega_c must be > 0, got {}", self.omega_c)
        })?;
        ensure(
            self.gc_collective.is_finite() && self.gc_collective >= 0.0,
            || format!("gc_collective must be >= 0, got {}", self.gc_collective),
        )?;
        ensure(self.n_modes >= 1 && self.n_modes % 2 == 1, || {
            format!("n_modes must be odd and >= 1, got {}", self.n_modes)
        })?;
        ensure(self.n_molecules >= self.n_modes, || {
            format!(
                "n_molecules ({}) must be >= n_modes ({})",
                self.n_molecules, self.n_modes
            )
        })?;
        ensure(self.spacing.is_finite() && self.spacing > 0.0, || {
            format!("spacing must be > 0, got {}", self.spacing)
        })?;
        Ok(())
    }

    /// k_⊥ = ω_c / c (nm⁻¹).
    pub fn k_perp(&self) -> f64 {
        self.omega_c / HBAR_C
    }

    /// Ring length N·L (nm).
    pub fn box_length(&self) -> f64 {
        self.n_molecules as f64 * self.spacing
    }

    /// Spacing of the cavity wavevectors, 2π/(NL) (nm⁻¹).
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.box_length()
    }

    /// Mode indices −(M−1)/2 … (M−1)/2.
    pub fn mode_indices(&self) -> Vec<i64> {
        let half = (self.n_modes as i64 - 1) / 2;
        (-half..=half).collect()
    }

    /// Site positions x_n = nL, n = 0 … N−1 (nm).
    pub fn site_positions(&self) -> Vec<f64> {
        (0..self.n_molecules)
            .map(|n| n as f64 * self.spacing)
            .collect()
    }
}

/// Wavevectors at which the model is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    /// Integer mode indices when the grid is the cavity grid.
    pub indices: Option<Vec<i64>>,
    /// k_∥ values (nm⁻¹), strictly increasing.
    pub k_parallel: Vec<f64>,
}

impl KGrid {
    /// The discrete cavity grid k_∥ = 2πk/(NL).
    pub fn cavity(params: &ModelParams) -> Self {
        let dk = params.dk();
        let indices = params.mode_indices();
        let k_parallel = indices.iter().map(|&j| j as f64 * dk).collect();
        KGrid {
            indices: Some(indices),
            k_parallel,
        }
    }

    /// `n` evenly spaced points on `[k_min, k_max]`, independent of N and M.
    pub fn dense(k_min: f64, k_max: f64, n: usize) -> Result<Self> {
        if !(k_min.is_finite() && k_max.is_finite()) || k_max <= k_min || n < 2 {
            return Err(Error::InvalidParameter(format!(
                "dense grid needs k_min < k_max and n >= 2 (got [{k_min}, {k_max}], n = {n})"
            )));
        }
        let step = (k_max - k_min) / (n - 1) as f64;
        let k_parallel = (0..n).map(|i| k_min + i as f64 * step).collect();
        Ok(KGrid {
            indices: None,
            k_parallel,
        })
    }

    /// A grid of explicitly given points (must be strictly increasing).
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empty k grid".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) || points.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidParameter(
                "k grid must be finite and strictly increasing".into(),
            ));
        }
        Ok(KGrid {
            indices: None,
            k_parallel: points,
        })
    }

    pub fn len(&self) -> usize {
        self.k_parallel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_parallel.is_empty()
    }
}
