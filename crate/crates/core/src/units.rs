//! Physical constants in the crate's unit system (eV, fs, nm, K).

/// Reduced Planck constant, eV·fs.
pub const HBAR: f64 = 0.658_211_956_9;

/// Speed of light, nm/fs.
pub const C_LIGHT: f64 = 299.792_458;

/// Boltzmann constant, eV/K.
pub const K_B: f64 = 8.617_333_262e-5;

/// ħc in eV·nm.
pub const HBAR_C: f64 = HBAR * C_LIGHT;
