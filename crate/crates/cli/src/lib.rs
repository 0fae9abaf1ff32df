//! Command-line front end for the `polariton` library.
//!
//! ```text
//! polariton [--config run.toml] [--sweep lambda=0.002,0.006] [--out dir] bands
//! polariton vg
//! polariton ehrenfest [--ntraj 100] [--seed 7] [--force]
//! polariton compare --theory out/vg.csv --sim out/summary.csv --tolerance 0.15
//! polariton config            # print the effective configuration
//! ```
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 comparison outside tolerance.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "polariton", version, about = "Polariton band renormalization and Ehrenfest transport")]
pub struct Cli {
    /// TOML run configuration; defaults are used for anything missing.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override the sweep, e.g. `lambda=0.002,0.004` or `temperature=100,200`.
    #[arg(long, global = true)]
    pub sweep: Option<String>,

    /// Output directory (falls back to the config, then $POLARITON_OUT).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Base seed of the trajectory ensemble.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Number of trajectories.
    #[arg(long, global = true)]
    pub ntraj: Option<usize>,

    /// Run even when the work estimate exceeds the configured budget.
    #[arg(long, global = true)]
    pub force: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bare and renormalized band structure on the dense k grid.
    Bands,
    /// Group velocities at the configured LP energies.
    Vg,
    /// Ehrenfest trajectory ensemble and wavefront fit.
    Ehrenfest,
    /// Join a theory table with simulation summaries.
    Compare {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        sim: PathBuf,
        /// Allowed relative deviation.
        #[arg(long, default_value_t = 0.10)]
        tolerance: f64,
        /// Only hold points with sweep value up to this to the tolerance.
        #[arg(long)]
        check_up_to: Option<f64>,
        #[arg(long, default_value = "vg_renorm_darkonly")]
        theory_column: String,
        #[arg(long, default_value = "vg_fit")]
        sim_column: String,
    },
    /// Print the effective configuration as TOML.
    Config,
}

impl Cli {
    /// Configuration file plus flag overrides.
    pub fn effective_config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.sweep {
            cfg.sweep = Some(s.parse()?);
        }
        if let Some(seed) = self.seed {
            cfg.ensemble.base_seed = seed;
        }
        if let Some(n) = self.ntraj {
            cfg.ensemble.n_traj = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Execute a parsed command line and return what to print on stdout.
pub fn run(cli: &Cli) -> CliResult<String> {
    if let Command::Compare {
        theory,
        sim,
        tolerance,
        check_up_to,
        theory_column,
        sim_column,
    } = &cli.command
    {
        let dir = cli
            .out
            .clone()
            .or_else(|| std::env::var_os(config::OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("polariton-out"));
        let opts = commands::CompareOptions {
            theory_column: theory_column.clone(),
            sim_column: sim_column.clone(),
            tolerance: *tolerance,
            check_up_to: *check_up_to,
        };
        let (path, rows) = commands::cmd_compare(theory, sim, &dir, &opts)?;
        return Ok(format!("{} ({} points)", path.display(), rows.len()));
    }

    let cfg = cli.effective_config()?;
    let dir = cfg.output_dir(cli.out.as_deref());
    let files = match &cli.command {
        Command::Bands => commands::cmd_bands(&cfg, &dir)?,
        Command::Vg => vec![commands::cmd_vg(&cfg, &dir)?],
        Command::Ehrenfest => {
            let out = commands::cmd_ehrenfest(&cfg, &dir, cli.force)?;
            let mut files = out.files;
            files.push(out.summary);
            files
        }
        Command::Config => return cfg.to_toml(),
        Command::Compare { .. } => unreachable!(),
    };
    Ok(files
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join("\n"))
}
