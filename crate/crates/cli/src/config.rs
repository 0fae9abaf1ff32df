//! Run configuration: a TOML file with one table per concern. Every table
//! and every key is optional; missing values take the documented defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use polariton::ehrenfest::{EnsembleConfig, WavefrontOptions, WavepacketInit};
use polariton::greens::{BranchSet, SelfEnergyConfig, ThermalState};
use polariton::model::{BathSpec, KGrid, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "POLARITON_OUT";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    /// Phonon bath; `n_modes` is the Ehrenfest discretization.
    pub bath: BathSpec,
    pub thermal: ThermalState,
    pub self_energy: TheoryConfig,
    pub wavepacket: WavepacketConfig,
    pub ensemble: DynamicsConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    pub output: OutputConfig,
}

/// Green's-function evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    /// Broadening η (eV).
    pub eta: f64,
    pub include: BranchSet,
    /// Use the dark-state closed form for the `*_renorm` band columns.
    pub dark_only: bool,
    /// Δk_∥ for pointwise group velocities (nm⁻¹).
    pub derivative_step: f64,
    pub self_consistent: bool,
    /// Bath modes used by the theory (much finer than the Ehrenfest bath).
    pub bath_modes: usize,
    /// Band grid window (nm⁻¹); `k_max` defaults to 3k_⊥.
    pub k_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<f64>,
    pub k_points: usize,
    /// LP energies (eV) at which `vg` reports group velocities.
    pub lp_energies: Vec<f64>,
    /// TAST prefactor G; the `vg_tast` column is empty without it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tast_g: Option<f64>,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        let base = SelfEnergyConfig::default();
        TheoryConfig {
            eta: base.eta,
            include: base.include,
            dark_only: base.dark_only,
            derivative_step: base.derivative_step,
            self_consistent: base.self_consistent,
            bath_modes: 10_000,
            k_min: 0.0,
            k_max: None,
            k_points: 2001,
            lp_energies: vec![1.84, 1.86],
            tast_g: None,
        }
    }
}

impl TheoryConfig {
    pub fn kernel(&self, dark_only: bool) -> SelfEnergyConfig {
        SelfEnergyConfig {
            eta: self.eta,
            include: self.include,
            dark_only,
            derivative_step: self.derivative_step,
            self_consistent: self.self_consistent,
        }
    }

    pub fn grid(&self, model: &ModelParams) -> CliResult<KGrid> {
        let k_max = self.k_max.unwrap_or(3.0 * model.k_perp());
        Ok(KGrid::dense(self.k_min, k_max, self.k_points)?)
    }
}

/// Initial LP wavepacket, specified by energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavepacketConfig {
    /// Central LP energy (eV).
    pub lp_energy: f64,
    /// Energy width ħσ_E (eV).
    pub sigma_energy: f64,
    /// Launch position (nm); a quarter of the ring when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_x: Option<f64>,
}

impl Default for WavepacketConfig {
    fn default() -> Self {
        WavepacketConfig {
            lp_energy: 1.86,
            sigma_energy: 0.005,
            center_x: None,
        }
    }
}

impl WavepacketConfig {
    pub fn init(&self, model: &ModelParams) -> CliResult<WavepacketInit> {
        Ok(WavepacketInit::from_lp_energy(
            model,
            self.lp_energy,
            self.sigma_energy,
            self.center_x,
        )?)
    }
}

/// Ehrenfest ensemble settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub n_traj: usize,
    pub base_seed: u64,
    pub dt_nuclear: f64,
    pub dt_electronic: f64,
    pub t_max: f64,
    pub snapshot_stride: usize,
    pub threshold: f64,
    pub fit_window: [f64; 2],
    pub max_failure_fraction: f64,
    /// Upper bound on N·M·(electronic steps)·n_traj without `--force`.
    pub budget: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        let e = EnsembleConfig::default();
        DynamicsConfig {
            n_traj: e.n_traj,
            base_seed: e.base_seed,
            dt_nuclear: e.dt_nuclear,
            dt_electronic: e.dt_electronic,
            t_max: e.t_max,
            snapshot_stride: e.snapshot_stride,
            threshold: e.wavefront.threshold,
            fit_window: [e.wavefront.fit_window.0, e.wavefront.fit_window.1],
            max_failure_fraction: e.max_failure_fraction,
            budget: 1e12,
        }
    }
}

impl DynamicsConfig {
    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            n_traj: self.n_traj,
            base_seed: self.base_seed,
            dt_nuclear: self.dt_nuclear,
            dt_electronic: self.dt_electronic,
            t_max: self.t_max,
            snapshot_stride: self.snapshot_stride,
            wavefront: WavefrontOptions {
                threshold: self.threshold,
                fit_window: (self.fit_window[0], self.fit_window[1]),
            },
            max_failure_fraction: self.max_failure_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Lambda,
    Temperature,
    LpEnergy,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Temperature => "temperature",
            SweepAxis::LpEnergy => "lp_energy",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim() {
            "lambda" => Ok(SweepAxis::Lambda),
            "temperature" | "T" => Ok(SweepAxis::Temperature),
            "lp_energy" | "lpEnergy" | "energy" => Ok(SweepAxis::LpEnergy),
            other => Err(CliError::Usage(format!(
                "unknown sweep axis '{other}' (expected lambda, temperature or lp_energy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = CliError;

    /// `axis=v1,v2,...`, e.g. `lambda=0.002,0.004,0.006`.
    fn from_str(s: &str) -> CliResult<Self> {
        let (axis, values) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("sweep '{s}' must look like axis=v1,v2")))?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Usage(format!("sweep value '{v}': {e}")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Sweep {
            axis: axis.parse()?,
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub format: OutputFormat,
    /// Write every n-th snapshot to the density file; 0 disables it.
    pub density_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            format: OutputFormat::Csv,
            density_stride: 10,
        }
    }
}

/// One point of a sweep with the configuration it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub config: RunConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn sweep_axis(&self) -> SweepAxis {
        self.sweep.as_ref().map_or(SweepAxis::Lambda, |s| s.axis)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.model.validate()?;
        self.bath.validate()?;
        self.thermal.validate()?;
        self.self_energy.kernel(self.self_energy.dark_only).validate()?;
        self.self_energy.kernel(false).validate()?;
        self.bath.with_modes(self.self_energy.bath_modes).validate()?;
        self.self_energy.grid(&self.model)?;
        if let Some(g) = self.self_energy.tast_g {
            polariton::greens::TastParams::new(g)?;
        }
        if self.self_energy.lp_energies.iter().any(|e| !e.is_finite()) {
            return Err(CliError::Config("lp_energies must be finite".into()));
        }
        if !(self.wavepacket.sigma_energy > 0.0 && self.wavepacket.lp_energy.is_finite()) {
            return Err(CliError::Config(
                "wavepacket needs a finite lp_energy and sigma_energy > 0".into(),
            ));
        }
        self.ensemble.ensemble().propagation()?;
        if self.ensemble.base_seed > i64::MAX as u64 {
            return Err(CliError::Config(format!(
                "base_seed must be <= {}",
                i64::MAX
            )));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(CliError::Config("sweep values must be non-empty".into()));
            }
            for &v in &s.values {
                let ok = match s.axis {
                    SweepAxis::Lambda => v.is_finite() && v >= 0.0,
                    SweepAxis::Temperature | SweepAxis::LpEnergy => v.is_finite() && v > 0.0,
                };
                if !ok {
                    return Err(CliError::Config(format!(
                        "invalid {} sweep value {v}",
                        s.axis.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Configurations for each sweep value. Without a sweep this is the
    /// single point λ = bath.lambda.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let Some(sweep) = &self.sweep else {
            return vec![SweepPoint {
                value: self.bath.lambda,
                config: self.clone(),
            }];
        };
        sweep
            .values
            .iter()
            .map(|&value| {
                let mut config = self.clone();
                match sweep.axis {
                    SweepAxis::Lambda => config.bath.lambda = value,
                    SweepAxis::Temperature => config.thermal.temperature = value,
                    SweepAxis::LpEnergy => {
                        config.wavepacket.lp_energy = value;
                        config.self_energy.lp_energies = vec![value];
                    }
                }
                SweepPoint { value, config }
            })
            .collect()
    }

    /// Output directory: explicit flag, then the config, then `POLARITON_OUT`,
    /// then `./polariton-out`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.directory.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("polariton-out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.model, ModelParams::reference());
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let cfg = RunConfig::from_toml("[bath]\nlambda = 0.012\n[thermal]\ntemperature = 200.0\n")
            .unwrap();
        assert_eq!(cfg.bath.lambda, 0.012);
        assert_eq!(cfg.bath.n_modes, 35);
        assert_eq!(cfg.thermal.temperature, 200.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[bath]\nlamda = 0.01\n").is_err());
        assert!(RunConfig::from_toml("[sweep]\naxis = \"pressure\"\nvalues = [1.0]\n").is_err());
    }

    #[test]
    fn round_trip_is_value_identical() {
        let mut cfg = RunConfig::default();
        cfg.sweep = Some("temperature=100,200,300".parse().unwrap());
        cfg.self_energy.tast_g = Some(3.0);
        cfg.wavepacket.center_x = Some(1234.5);
        cfg.output.directory = Some(PathBuf::from("runs/a"));
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn sweep_flag_parses() {
        let s: Sweep = "lambda=0.002, 0.004,0.006".parse().unwrap();
        assert_eq!(s.axis, SweepAxis::Lambda);
        assert_eq!(s.values, vec![0.002, 0.004, 0.006]);
        assert!("lambda".parse::<Sweep>().is_err());
        assert!("foo=1".parse::<Sweep>().is_err());
        assert!("lambda=x".parse::<Sweep>().is_err());
    }

    #[test]
    fn sweep_points_apply_axis() {
        let mut cfg = RunConfig::default();
        cfg.sweep = Some("lp_energy=1.84,1.86".parse().unwrap());
        let pts = cfg.sweep_points();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].config.wavepacket.lp_energy, 1.86);
        assert_eq!(pts[1].config.self_energy.lp_energies, vec![1.86]);
        cfg.sweep = None;
        assert_eq!(cfg.sweep_points()[0].value, cfg.bath.lambda);
    }

    #[test]
    fn invalid_values_fail_validation() {
        let mut cfg = RunConfig::default();
        cfg.sweep = Some(Sweep {
            axis: SweepAxis::Temperature,
            values: vec![],
        });
        assert!(cfg.validate().is_err());
        cfg.sweep = Some("temperature=-5".parse().unwrap());
        assert!(cfg.validate().is_err());
        cfg.sweep = None;
        cfg.model.n_modes = 4;
        assert!(cfg.validate().is_err());
    }
}
