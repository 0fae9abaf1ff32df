use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{ensure, Result};

/// Drude-Lorentz spectral density J(ω) = 2λω_fω/(ω² + ω_f²) and the number
/// of modes used to discretize it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSpec {
    /// Reorganization energy λ (eV).
    pub lambda: f64,
    /// Characteristic frequency ħω_f (eV).
    pub omega_f: f64,
    /// Number of discrete modes N_b.
    pub n_modes: usize,
}

impl Default for BathSpec {
    /// λ = 6 meV, ħω_f = 6 meV, N_b = 35.
    fn default() -> Self {
        BathSpec {
            lambda: 0.006,
            omega_f: 0.006,
            n_modes: 35,
        }
    }
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.lambda.is_finite() && self.lambda >= 0.0, || {
            format!("lambda must be >= 0, got {}", self.lambda)
        })?;
        ensure(self.omega_f.is_finite() && self.omega_f > 0.0, || {
            format!("omega_f must be > 0, got {}", self.omega_f)
        })?;
        ensure(self.n_modes >= 1, || "bath needs at least one mode".into())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        BathSpec {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_modes(&self, n_modes: usize) -> Self {
        BathSpec {
            n_modes,
            ..self.clone()
        }
    }
}

/// Discrete phonon modes {ħω_α, c_α}, both in eV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedBath {
    pub omega: Vec<f64>,
    pub coupling: Vec<f64>,
}

impl DiscretizedBath {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Σ_α c_α²/ω_α (eV).
    pub fn reorganization_energy(&self) -> f64 {
        self.omega
            .iter()
            .zip(&self.coupling)
            .map(|(w, c)| c * c / w)
            .sum()
    }
}

/// Equal-λ discretization: ω_α = ω_f·tan[π/2·(1 − α/(N_b+1))],
/// c_α = √(λω_α/(N_b+1)), α = 1 … N_b.
///
/// Every mode carries the same share λ/(N_b+1) of the reorganization energy,
/// and the frequencies decrease with α.
pub fn discretize_bath(spec: &BathSpec) -> Result<DiscretizedBath> {
    spec.validate()?;
    let nb1 = (spec.n_modes + 1) as f64;
    let omega: Vec<f64> = (1..=spec.n_modes)
        .map(|a| spec.omega_f * (FRAC_PI_2 * (1.0 - a as f64 / nb1)).tan())
        .collect();
    let coupling = omega
        .iter()
        .map(|w| (spec.lambda * w / nb1).sqrt())
        .collect();
    Ok(DiscretizedBath { omega, coupling })
}
