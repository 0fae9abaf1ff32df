use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitudes of |ψ⟩ = Σ_n c_n|E_n⟩ + Σ_k c_k|k⟩, stored contiguously with
/// the N exciton amplitudes first and the M photon amplitudes after them.
/// Photon amplitudes are ordered by mode index −(M−1)/2 … (M−1)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationState {
    amplitudes: Vec<Complex64>,
    n_sites: usize,
}

impl SingleExcitationState {
    pub fn zeros(n_sites: usize, n_modes: usize) -> Self {
        SingleExcitationState {
            amplitudes: vec![Complex64::new(0.0, 0.0); n_sites + n_modes],
            n_sites,
        }
    }

    pub fn from_parts(exciton: Vec<Complex64>, photon: Vec<Complex64>) -> Self {
        let n_sites = exciton.len();
        let mut amplitudes = exciton;
        amplitudes.extend(photon);
        SingleExcitationState {
            amplitudes,
            n_sites,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_modes(&self) -> usize {
        self.amplitudes.len() - self.n_sites
    }

    pub fn exciton(&self) -> &[Complex64] {
        &self.amplitudes[..self.n_sites]
    }

    pub fn photon(&self) -> &[Complex64] {
        &self.amplitudes[self.n_sites..]
    }

    pub fn exciton_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes[..self.n_sites]
    }

    pub fn photon_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes[self.n_sites..]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn exciton_population(&self) -> f64 {
        self.exciton().iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn photon_population(&self) -> f64 {
        self.photon().iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical(format!("cannot normalize state of norm {norm}")));
        }
        let inv = 1.0 / norm;
        self.amplitudes.iter_mut().for_each(|c| *c *= inv);
        Ok(())
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &SingleExcitationState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Mass-weighted phonon coordinates R_{α,n} (√eV·fs) and momenta P_{α,n}
/// (√eV), stored site-major: index `n * n_modes + α`.
#[derive(Debug, Clone, PartialEq)]
pub struct NuclearPhaseSpace {
    pub n_sites: usize,
    pub n_modes: usize,
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
}

impl NuclearPhaseSpace {
    pub fn zeros(n_sites: usize, n_modes: usize) -> Self {
        NuclearPhaseSpace {
            n_sites,
            n_modes,
            positions: vec![0.0; n_sites * n_modes],
            momenta: vec![0.0; n_sites * n_modes],
        }
    }

    pub fn check_shape(&self, n_sites: usize, n_modes: usize) -> Result<()> {
        let len = n_sites * n_modes;
        if self.n_sites != n_sites
            || self.n_modes != n_modes
            || self.positions.len() != len
            || self.momenta.len() != len
        {
            return Err(Error::Shape(format!(
                "nuclear phase space is {}x{} with {}/{} entries, expected {n_sites}x{n_modes}",
                self.n_sites,
                self.n_modes,
                self.positions.len(),
                self.momenta.len()
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().chain(&self.momenta).all(|x| x.is_finite())
    }
}
