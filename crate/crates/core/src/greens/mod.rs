//! Finite-temperature Green's-function theory of the polariton band
//! renormalization.
//!
//! The first-order (Fan-Migdal) self-energy of branch μ at wavevector k is
//!
//! ```text
//! Σ_μk(E) = ζ²_μk Σ_ν,k' ζ²_νk' (2/N) Σ_α c_α² · [(1 + n̄_α)/(E − ε_νk' − ħω_α + iη)
//!                                              +      n̄_α /(E − ε_νk' + ħω_α + iη)]
//! ```
//!
//! with ν running over the upper, lower and dark branches. Evaluated on shell
//! (E = ε_μk) its real part shifts the band and the `k`-derivative of the
//! shifted band is the renormalized group velocity. The N − M dark states are
//! exactly degenerate at ħω₀, so in the large-N limit their contribution
//! collapses to ζ²_μk Σ_α 2c_α² Ξ(ε_μk − ħω₀): this is the `dark_only` mode.

mod kernel;
mod self_energy;
mod tast;

pub use kernel::{bose_einstein, dark_polarizability_lp, polarizability, polarizability_imag};
pub(crate) use kernel::{dark_kernel, xi_im, xi_re};
pub use self_energy::{
    renormalized_band, renormalized_vg, BranchRenormalization, RenormalizedBandPoint, SelfEnergy,
};
pub use tast::{fit_tast_g, tast_vg, TastParams};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::units::K_B;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalState {
    /// Temperature (K).
    pub temperature: f64,
}

impl Default for ThermalState {
    /// Room temperature, 300 K.
    fn default() -> Self {
        ThermalState { temperature: 300.0 }
    }
}

impl ThermalState {
    pub fn new(temperature: f64) -> Result<Self> {
        let t = ThermalState { temperature };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.temperature.is_finite() && self.temperature > 0.0, || {
            format!("temperature must be > 0 K, got {}", self.temperature)
        })
    }

    /// β = 1/(k_B T) (eV⁻¹).
    pub fn beta(&self) -> f64 {
        1.0 / (K_B * self.temperature)
    }

    /// k_B T (eV).
    pub fn kt(&self) -> f64 {
        K_B * self.temperature
    }
}

/// Branches admitted as intermediate states ν in the full self-energy sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BranchSet {
    pub upper: bool,
    pub lower: bool,
    pub dark: bool,
}

impl Default for BranchSet {
    fn default() -> Self {
        BranchSet {
            upper: true,
            lower: true,
            dark: true,
        }
    }
}

impl BranchSet {
    pub fn is_empty(&self) -> bool {
        !(self.upper || self.lower || self.dark)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfEnergyConfig {
    /// Broadening η (eV).
    pub eta: f64,
    /// Intermediate branches for the full sum; ignored when `dark_only`.
    pub include: BranchSet,
    /// Keep only the dark-state term with (N − M)/N → 1.
    pub dark_only: bool,
    /// Step Δk_∥ (nm⁻¹) for pointwise derivatives of the renormalized band.
    pub derivative_step: f64,
    /// Solve E = ε + Re Σ(E) by damped fixed-point iteration instead of
    /// evaluating Σ on shell.
    pub self_consistent: bool,
}

impl Default for SelfEnergyConfig {
    fn default() -> Self {
        SelfEnergyConfig {
            eta: 1e-3,
            include: BranchSet::default(),
            dark_only: true,
            derivative_step: 1e-6,
            self_consistent: false,
        }
    }
}

impl SelfEnergyConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.eta.is_finite() && self.eta > 0.0, || {
            format!("eta must be > 0, got {}", self.eta)
        })?;
        ensure(
            self.derivative_step.is_finite() && self.derivative_step > 0.0,
            || format!("derivative_step must be > 0, got {}", self.derivative_step),
        )?;
        if !self.dark_only && self.include.is_empty() {
            return Err(Error::Config(
                "full-sum self-energy with no intermediate branches selected".into(),
            ));
        }
        Ok(())
    }
}
