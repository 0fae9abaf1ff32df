//! Thermally activated scattering theory: the phenomenological comparison
//! curve ṽ = v / (1 + G·e^{−βħΔω}).

use serde::{Deserialize, Serialize};

use super::ThermalState;
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TastParams {
    /// Dimensionless scattering ratio G.
    pub g: f64,
}

impl TastParams {
    pub fn new(g: f64) -> Result<Self> {
        ensure(g.is_finite() && g >= 0.0, || format!("G must be >= 0, got {g}"))?;
        Ok(TastParams { g })
    }
}

pub fn tast_vg(vg_bare: f64, dark_gap: f64, thermal: &ThermalState, tast: &TastParams) -> Result<f64> {
    if !(dark_gap > 0.0) {
        return Err(Error::Domain(format!(
            "dark gap must be positive, got {dark_gap}"
        )));
    }
    Ok(vg_bare / (1.0 + tast.g * (-thermal.beta() * dark_gap).exp()))
}

/// The G for which the TAST curve passes through `vg_target` at `thermal`.
pub fn fit_tast_g(vg_bare: f64, vg_target: f64, dark_gap: f64, thermal: &ThermalState) -> f64 {
    (vg_bare / vg_target - 1.0) * (thermal.beta() * dark_gap).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_g_is_bare() {
        let th = ThermalState::new(300.0).unwrap();
        let v = tast_vg(41.6, 0.1, &th, &TastParams::new(0.0).unwrap()).unwrap();
        assert_eq!(v, 41.6);
    }

    #[test]
    fn low_temperature_is_bare() {
        let th = ThermalState::new(1.0).unwrap();
        let v = tast_vg(41.6, 0.1, &th, &TastParams::new(3.0).unwrap()).unwrap();
        assert_eq!(v, 41.6);
    }

    #[test]
    fn fitted_g_reproduces_target() {
        let th = ThermalState::new(300.0).unwrap();
        let g = fit_tast_g(41.6, 39.0, 0.1, &th);
        let v = tast_vg(41.6, 0.1, &th, &TastParams::new(g).unwrap()).unwrap();
        assert_relative_eq!(v, 39.0, max_relative = 1e-13);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(TastParams::new(-1.0).is_err());
        let th = ThermalState::new(300.0).unwrap();
        assert!(tast_vg(1.0, 0.0, &th, &TastParams::new(1.0).unwrap()).is_err());
    }
}
