//! Thermal occupations and the energy-denominator kernels of the self-energy.
//!
//! All energies are in eV; the kernels return eV⁻¹. The public functions take
//! a [`ThermalState`]; the crate-internal variants take a precomputed
//! occupation so the mode sums do not recompute exponentials.

use super::ThermalState;
use crate::error::{Error, Result};
use crate::model::BandPoint;

/// Bose-Einstein occupation 1/(e^{βħω} − 1) of a mode with energy `omega` (eV).
///
/// Written as e^{−x}/(1 − e^{−x}) so it underflows gracefully to 0 instead of
/// overflowing when βħω is large.
pub fn bose_einstein(omega: f64, thermal: &ThermalState) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "Bose-Einstein occupation needs a positive mode energy, got {omega}"
        )));
    }
    let x = thermal.beta() * omega;
    Ok((-x).exp() / -(-x).exp_m1())
}

/// Re[(1 + n̄)/(ε_μ − ε_ν − ħω_α + iη) + n̄/(ε_μ − ε_ν + ħω_α + iη)].
pub fn polarizability(
    e_mu: f64,
    e_nu: f64,
    omega: f64,
    thermal: &ThermalState,
    eta: f64,
) -> Result<f64> {
    Ok(xi_re(e_mu - e_nu, omega, bose_einstein(omega, thermal)?, eta))
}

/// Imaginary part of the expression in [`polarizability`].
pub fn polarizability_imag(
    e_mu: f64,
    e_nu: f64,
    omega: f64,
    thermal: &ThermalState,
    eta: f64,
) -> Result<f64> {
    Ok(xi_im(e_mu - e_nu, omega, bose_einstein(omega, thermal)?, eta))
}

/// Dark-state kernel of the lower polariton,
/// n̄(ω − Δ)/((ω − Δ)² + η²) − (1 + n̄)/(ω + Δ), with Δ the dark gap.
///
/// Only the absorption denominator carries η; the emission denominator
/// ω + Δ never vanishes for Δ > 0.
pub fn dark_polarizability_lp(
    point: &BandPoint,
    omega: f64,
    thermal: &ThermalState,
    eta: f64,
) -> Result<f64> {
    if !(point.dark_gap > 0.0) {
        return Err(Error::Domain(format!(
            "dark gap must be positive, got {}",
            point.dark_gap
        )));
    }
    Ok(dark_kernel(
        point.dark_gap,
        omega,
        bose_einstein(omega, thermal)?,
        eta,
    ))
}

/// `d` is ε_μ − ε_ν.
pub(crate) fn xi_re(d: f64, omega: f64, occupation: f64, eta: f64) -> f64 {
    let a = d - omega;
    let b = d + omega;
    (1.0 + occupation) * a / (a * a + eta * eta) + occupation * b / (b * b + eta * eta)
}

pub(crate) fn xi_im(d: f64, omega: f64, occupation: f64, eta: f64) -> f64 {
    let a = d - omega;
    let b = d + omega;
    -eta * ((1.0 + occupation) / (a * a + eta * eta) + occupation / (b * b + eta * eta))
}

pub(crate) fn dark_kernel(gap: f64, omega: f64, occupation: f64, eta: f64) -> f64 {
    let a = omega - gap;
    occupation * a / (a * a + eta * eta) - (1.0 + occupation) / (omega + gap)
}
