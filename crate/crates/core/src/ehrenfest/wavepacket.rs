use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::SingleExcitationState;
use crate::error::{ensure, Result};
use crate::model::{bare_group_velocity, lp_wavevector_for_energy, polariton_point, Branch, ModelParams};
use crate::units::HBAR;

/// Gaussian superposition of lower-polariton eigenstates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketInit {
    /// Central wavevector k₀ (nm⁻¹).
    pub center_k: f64,
    /// Standard deviation σ_k of |amplitude|² in k (nm⁻¹).
    pub width_k: f64,
    /// Launch position x₀ (nm); defaults to a quarter of the ring.
    pub center_x: Option<f64>,
}

impl WavepacketInit {
    /// Center the packet at the LP wavevector of `energy` with an energy
    /// spread `sigma_energy`, mapped to σ_k through the local slope of the
    /// bare LP band.
    pub fn from_lp_energy(
        params: &ModelParams,
        energy: f64,
        sigma_energy: f64,
        center_x: Option<f64>,
    ) -> Result<Self> {
        ensure(sigma_energy.is_finite() && sigma_energy > 0.0, || {
            format!("energy width must be > 0, got {sigma_energy}")
        })?;
        let k0 = lp_wavevector_for_energy(energy, params)?;
        let slope = HBAR * bare_group_velocity(k0, Branch::Lower, params).abs();
        ensure(slope > 0.0, || {
            format!("LP band is flat at {energy} eV, cannot map the energy width")
        })?;
        Ok(WavepacketInit {
            center_k: k0,
            width_k: sigma_energy / slope,
            center_x,
        })
    }
}

/// Initial state together with diagnostics about the cavity grid.
#[derive(Debug, Clone)]
pub struct PreparedWavepacket {
    pub state: SingleExcitationState,
    /// ⟨k⟩ of the discretized packet (nm⁻¹).
    pub mean_k: f64,
    /// Launch position actually used (nm).
    pub center_x: f64,
    /// Fraction of the Gaussian weight that falls outside the cavity grid.
    pub leakage: f64,
}

impl PreparedWavepacket {
    pub const LEAKAGE_LIMIT: f64 = 0.01;

    pub fn warning(&self) -> Option<String> {
        (self.leakage > Self::LEAKAGE_LIMIT).then(|| {
            format!(
                "{:.2}% of the wavepacket weight lies outside the cavity k-grid",
                100.0 * self.leakage
            )
        })
    }
}

/// Build |ψ(0)⟩ = Σ_k w_k |LP_k⟩ with w_k ∝ exp(−(k−k₀)²/4σ_k²)·e^{−ikx₀},
/// where |LP_k⟩ = −sinΘ_k|B_k⟩ + cosΘ_k|k⟩ and
/// |B_k⟩ = N^{−1/2} Σ_n e^{ikx_n}|E_n⟩.
pub fn initialize_wavepacket(
    init: &WavepacketInit,
    params: &ModelParams,
) -> Result<PreparedWavepacket> {
    params.validate()?;
    ensure(init.width_k.is_finite() && init.width_k > 0.0, || {
        format!("width_k must be > 0, got {}", init.width_k)
    })?;
    let dk = params.dk();
    let indices = params.mode_indices();
    let k_max = *indices.last().unwrap() as f64 * dk;
    ensure(init.center_k.is_finite() && init.center_k.abs() <= k_max, || {
        format!(
            "center_k = {} lies outside the cavity grid |k| <= {k_max}",
            init.center_k
        )
    })?;
    let x0 = init.center_x.unwrap_or(0.25 * params.box_length());
    ensure(x0.is_finite(), || "center_x must be finite".to_string())?;

    let weight = |k: f64| (-(k - init.center_k).powi(2) / (2.0 * init.width_k.powi(2))).exp();

    let n = params.n_molecules;
    let mut photon = Vec::with_capacity(indices.len());
    let mut bright = Vec::with_capacity(indices.len());
    let mut inside = 0.0;
    let mut mean_k = 0.0;
    for &j in &indices {
        let k = j as f64 * dk;
        let w = Complex64::from_polar(weight(k).sqrt(), -k * x0);
        let theta = polariton_point(k, params).mixing_angle;
        photon.push(w * theta.cos());
        bright.push((j, -w * theta.sin()));
        inside += weight(k);
        mean_k += weight(k) * k;
    }
    mean_k /= inside;

    // Weight on the infinite lattice of wavevectors with the same spacing.
    let pad = (10.0 * init.width_k / dk).ceil() as i64 + 1;
    let lo = indices[0].min((init.center_k / dk).floor() as i64 - pad);
    let hi = indices[indices.len() - 1].max((init.center_k / dk).ceil() as i64 + pad);
    let total: f64 = (lo..=hi).map(|j| weight(j as f64 * dk)).sum();
    let leakage = (1.0 - inside / total).max(0.0);

    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let exciton = (0..n)
        .map(|site| {
            bright
                .iter()
                .map(|&(j, a)| {
                    let jn = (j.rem_euclid(n as i64) as usize * site) % n;
                    let phase = 2.0 * std::f64::consts::PI * jn as f64 / n as f64;
                    a * Complex64::from_polar(inv_sqrt_n, phase)
                })
                .sum()
        })
        .collect();
    let mut state = SingleExcitationState::from_parts(exciton, photon);
    state.normalize()?;

    let prepared = PreparedWavepacket {
        state,
        mean_k,
        center_x: x0,
        leakage,
    };
    if let Some(msg) = prepared.warning() {
        log::warn!("{msg}");
    }
    Ok(prepared)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lp_wavevector_for_energy;

    #[test]
    fn packet_is_normalized_and_centered() {
        let params = ModelParams::reference();
        let init = WavepacketInit::from_lp_energy(&params, 1.86, 0.01, None).unwrap();
        let p = initialize_wavepacket(&init, &params).unwrap();
        assert!((p.state.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((p.mean_k - init.center_k).abs() < params.dk());
        assert!(p.leakage < 0.01);
        assert!(p.warning().is_none());
        let k0 = lp_wavevector_for_energy(1.86, &params).unwrap();
        assert_eq!(init.center_k, k0);
    }

    #[test]
    fn photon_share_matches_hopfield_weights() {
        let params = ModelParams::reference();
        let init = WavepacketInit::from_lp_energy(&params, 1.86, 0.01, None).unwrap();
        let p = initialize_wavepacket(&init, &params).unwrap();
        let dk = params.dk();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in params.mode_indices() {
            let k = j as f64 * dk;
            let w = (-(k - init.center_k).powi(2) / (2.0 * init.width_k.powi(2))).exp();
            num += w * polariton_point(k, &params).mixing_angle.cos().powi(2);
            den += w;
        }
        assert!((p.state.photon_population() - num / den).abs() < 1e-10);
    }

    #[test]
    fn wide_packet_warns_about_leakage() {
        let params = ModelParams::reference();
        let init = WavepacketInit {
            center_k: 10.0 * params.dk(),
            width_k: 20.0 * params.dk(),
            center_x: None,
        };
        let p = initialize_wavepacket(&init, &params).unwrap();
        assert!(p.leakage > 0.01);
        assert!(p.warning().is_some());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let params = ModelParams::reference();
        let bad = WavepacketInit {
            center_k: 1.0,
            width_k: 1e-4,
            center_x: None,
        };
        assert!(initialize_wavepacket(&bad, &params).is_err());
        let bad = WavepacketInit {
            center_k: 0.0,
            width_k: 0.0,
            center_x: None,
        };
        assert!(initialize_wavepacket(&bad, &params).is_err());
        assert!(WavepacketInit::from_lp_energy(&params, 1.97, 0.01, None).is_err());
    }
}
