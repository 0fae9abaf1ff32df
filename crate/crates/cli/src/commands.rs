//! The four subcommands. Each takes the effective configuration and an
//! output directory and returns the files it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use polariton::ehrenfest::{run_ensemble, EhrenfestRun, EnsembleResult};
use polariton::greens::{renormalized_band, tast_vg, SelfEnergy, TastParams};
use polariton::model::{
    bare_group_velocity, discretize_bath, lp_wavevector_for_energy, polariton_point, Branch,
};

use crate::config::{RunConfig, SweepPoint};
use crate::error::{CliError, CliResult};
use crate::table::{fmt_num, read_table, write_table, Provenance, Table};

pub const BANDS_COLUMNS: [&str; 8] = [
    "k_par",
    "E_photon",
    "E_UP_bare",
    "E_LP_bare",
    "E_UP_renorm",
    "E_LP_renorm",
    "hopfield_LP",
    "gamma_LP",
];

pub const VG_COLUMNS: [&str; 7] = [
    "sweep_value",
    "k_par",
    "lp_energy",
    "vg_bare",
    "vg_renorm_full",
    "vg_renorm_darkonly",
    "vg_tast",
];

pub const SUMMARY_COLUMNS: [&str; 14] = [
    "sweep_value",
    "lp_energy",
    "k0",
    "vg_fit",
    "vg_err",
    "fit_t_start",
    "fit_t_end",
    "boundary_reached",
    "n_traj",
    "n_failed",
    "max_norm_drift",
    "max_energy_drift",
    "base_seed",
    "leakage",
];

pub const COMPARE_COLUMNS: [&str; 6] = [
    "sweep_value",
    "lp_energy",
    "vg_theory",
    "vg_sim",
    "rel_deviation",
    "status",
];

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn point_file(dir: &Path, stem: &str, cfg: &RunConfig, value: f64) -> PathBuf {
    dir.join(format!("{stem}_{}_{}.csv", cfg.sweep_axis().name(), fmt_num(value)))
}

/// Renormalized band structure on the dense grid, one file per sweep value.
pub fn cmd_bands(cfg: &RunConfig, dir: &Path) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    ensure_dir(dir)?;
    let mut files = Vec::new();
    for SweepPoint { value, config: c } in cfg.sweep_points() {
        let bath = discretize_bath(&c.bath.with_modes(c.self_energy.bath_modes))?;
        let grid = c.self_energy.grid(&c.model)?;
        let kernel = c.self_energy.kernel(c.self_energy.dark_only);
        let band = renormalized_band(&grid, &c.model, &bath, &c.thermal, &kernel)?;
        let rows = band.iter().map(|p| {
            [
                p.base.k_parallel,
                p.base.photon_energy,
                p.base.energy_up,
                p.base.energy_lp,
                p.upper.energy,
                p.lower.energy,
                p.base.hopfield_lp,
                p.lower.linewidth,
            ]
            .iter()
            .map(|&x| fmt_num(x))
            .collect()
        });
        let mut prov = Provenance::new("bands", cfg)?;
        prov.push("sweep_value", fmt_num(value));
        let path = point_file(dir, "bands", cfg, value);
        write_table(&path, &prov, &BANDS_COLUMNS, rows)?;
        files.push(path);
    }
    Ok(files)
}

/// One row of the group-velocity table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgRow {
    pub sweep_value: f64,
    pub k_parallel: f64,
    pub lp_energy: f64,
    pub vg_bare: f64,
    pub vg_full: f64,
    pub vg_dark_only: f64,
    pub vg_tast: Option<f64>,
}

/// Theory group velocities at the configured LP energies for every sweep
/// value.
pub fn vg_rows(cfg: &RunConfig) -> CliResult<Vec<VgRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for SweepPoint { value, config: c } in cfg.sweep_points() {
        let bath = discretize_bath(&c.bath.with_modes(c.self_energy.bath_modes))?;
        let full = SelfEnergy::new(&c.model, &bath, &c.thermal, &c.self_energy.kernel(false))?;
        let dark = SelfEnergy::new(&c.model, &bath, &c.thermal, &c.self_energy.kernel(true))?;
        let tast = c.self_energy.tast_g.map(TastParams::new).transpose()?;
        for &energy in &c.self_energy.lp_energies {
            let k = lp_wavevector_for_energy(energy, &c.model)?;
            let vg_bare = bare_group_velocity(k, Branch::Lower, &c.model);
            let gap = polariton_point(k, &c.model).dark_gap;
            rows.push(VgRow {
                sweep_value: value,
                k_parallel: k,
                lp_energy: energy,
                vg_bare,
                vg_full: full.group_velocity(k, Branch::Lower)?,
                vg_dark_only: dark.group_velocity(k, Branch::Lower)?,
                vg_tast: tast
                    .as_ref()
                    .map(|t| tast_vg(vg_bare, gap, &c.thermal, t))
                    .transpose()?,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_vg(cfg: &RunConfig, dir: &Path) -> CliResult<PathBuf> {
    let rows = vg_rows(cfg)?;
    ensure_dir(dir)?;
    let mut prov = Provenance::new("vg", cfg)?;
    if let Some(g) = cfg.self_energy.tast_g {
        prov.push("tast_g", fmt_num(g));
    }
    let path = dir.join("vg.csv");
    write_table(
        &path,
        &prov,
        &VG_COLUMNS,
        rows.iter().map(|r| {
            vec![
                fmt_num(r.sweep_value),
                fmt_num(r.k_parallel),
                fmt_num(r.lp_energy),
                fmt_num(r.vg_bare),
                fmt_num(r.vg_full),
                fmt_num(r.vg_dark_only),
                r.vg_tast.map(fmt_num).unwrap_or_default(),
            ]
        }),
    )?;
    Ok(path)
}

/// Work estimate N·M·(electronic steps)·n_traj used by the desk-scale guard.
pub fn ehrenfest_cost(cfg: &RunConfig) -> CliResult<f64> {
    let prop = cfg.ensemble.ensemble().propagation()?;
    Ok(cfg.model.n_molecules as f64
        * cfg.model.n_modes as f64
        * (prop.n_steps * prop.substeps()) as f64
        * cfg.ensemble.n_traj as f64)
}

pub fn ehrenfest_run(c: &RunConfig) -> CliResult<EhrenfestRun> {
    Ok(EhrenfestRun {
        params: c.model.clone(),
        bath: c.bath.clone(),
        thermal: c.thermal,
        wavepacket: c.wavepacket.init(&c.model)?,
        ensemble: c.ensemble.ensemble(),
    })
}

/// Result of `ehrenfest` for one sweep value.
#[derive(Debug, Clone)]
pub struct EhrenfestPoint {
    pub sweep_value: f64,
    pub lp_energy: f64,
    pub result: EnsembleResult,
}

#[derive(Debug, Clone)]
pub struct EhrenfestOutput {
    pub points: Vec<EhrenfestPoint>,
    pub summary: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Run the ensemble for each sweep value and write density snapshots, the
/// front trace, the trajectory manifest and one summary table.
pub fn cmd_ehrenfest(cfg: &RunConfig, dir: &Path, force: bool) -> CliResult<EhrenfestOutput> {
    cfg.validate()?;
    let points = cfg.sweep_points();
    let cost: f64 = points
        .iter()
        .map(|p| ehrenfest_cost(&p.config))
        .sum::<CliResult<f64>>()?;
    if cost > cfg.ensemble.budget && !force {
        return Err(CliError::Config(format!(
            "estimated work {cost:.3e} exceeds the budget {:.3e}; raise ensemble.budget or pass --force",
            cfg.ensemble.budget
        )));
    }
    ensure_dir(dir)?;
    let prov = Provenance::new("ehrenfest", cfg)?;
    let mut out = Vec::new();
    let mut files = Vec::new();
    for SweepPoint { value, config: c } in points {
        log::info!("ehrenfest: {} = {}", cfg.sweep_axis().name(), fmt_num(value));
        let result = run_ensemble(&ehrenfest_run(&c)?)?;
        let mut p = prov.clone();
        p.push("sweep_value", fmt_num(value));

        let stride = c.output.density_stride;
        if stride > 0 {
            let path = point_file(dir, "density", cfg, value);
            let positions = c.model.site_positions();
            let rows = result
                .times
                .iter()
                .zip(&result.density)
                .step_by(stride)
                .flat_map(|(t, frame)| {
                    positions
                        .iter()
                        .zip(frame)
                        .map(move |(x, rho)| vec![fmt_num(*t), fmt_num(*x), fmt_num(*rho)])
                });
            write_table(&path, &p, &["t", "x", "rho"], rows)?;
            files.push(path);
        }

        if let Some(w) = &result.wavefront {
            let path = point_file(dir, "front", cfg, value);
            let rows = result
                .times
                .iter()
                .zip(&w.front)
                .map(|(t, x)| vec![fmt_num(*t), fmt_num(*x)]);
            write_table(&path, &p, &["t", "x_front"], rows)?;
            files.push(path);
        }

        let path = point_file(dir, "trajectories", cfg, value);
        let rows = result.trajectories.iter().map(|t| {
            let (norm, energy) = t
                .summary
                .map_or((String::new(), String::new()), |s| {
                    (fmt_num(s.norm_drift), fmt_num(s.energy_drift))
                });
            vec![
                t.index.to_string(),
                result.base_seed.to_string(),
                t.stream.to_string(),
                norm,
                energy,
                t.error.clone().unwrap_or_else(|| "ok".into()),
            ]
        });
        write_table(
            &path,
            &p,
            &["index", "base_seed", "stream", "norm_drift", "energy_drift", "status"],
            rows,
        )?;
        files.push(path);

        out.push(EhrenfestPoint {
            sweep_value: value,
            lp_energy: c.wavepacket.lp_energy,
            result,
        });
    }

    let summary = dir.join("summary.csv");
    let rows = out.iter().map(|p| {
        let r = &p.result;
        let (vg, err, t0, t1, boundary) = match &r.wavefront {
            Some(w) => (
                fmt_num(w.vg),
                fmt_num(w.vg_stderr),
                fmt_num(w.window.0),
                fmt_num(w.window.1),
                w.boundary_reached.to_string(),
            ),
            None => ("NaN".into(), "NaN".into(), String::new(), String::new(), String::new()),
        };
        vec![
            fmt_num(p.sweep_value),
            fmt_num(p.lp_energy),
            fmt_num(r.center_k),
            vg,
            err,
            t0,
            t1,
            boundary,
            r.n_traj.to_string(),
            r.n_failed.to_string(),
            fmt_num(r.max_norm_drift()),
            fmt_num(r.max_energy_drift()),
            r.base_seed.to_string(),
            fmt_num(r.leakage),
        ]
    });
    write_table(&summary, &prov, &SUMMARY_COLUMNS, rows)?;

    if let Some(p) = out.iter().find(|p| p.result.wavefront.is_none()) {
        return Err(CliError::Core(polariton::Error::Numerical(format!(
            "wavefront fit failed at {} = {}: {}",
            cfg.sweep_axis().name(),
            fmt_num(p.sweep_value),
            p.result.wavefront_error.clone().unwrap_or_default()
        ))));
    }
    Ok(EhrenfestOutput {
        points: out,
        summary,
        files,
    })
}

/// Options of `compare`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub theory_column: String,
    pub sim_column: String,
    pub tolerance: f64,
    /// Only points with sweep value ≤ this are held to the tolerance.
    pub check_up_to: Option<f64>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            theory_column: "vg_renorm_darkonly".into(),
            sim_column: "vg_fit".into(),
            tolerance: 0.10,
            check_up_to: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub sweep_value: f64,
    pub lp_energy: f64,
    pub theory: f64,
    pub sim: f64,
    pub rel_deviation: f64,
    pub checked: bool,
    pub pass: bool,
}

fn keyed(table: &Table, value_col: &str, what: &str) -> CliResult<BTreeMap<(u64, u64), f64>> {
    if table.rows.is_empty() {
        return Err(CliError::Usage(format!("{what} table has no data rows")));
    }
    let sv = table.column("sweep_value")?;
    let le = table.column("lp_energy")?;
    let vc = table.column(value_col)?;
    let mut map = BTreeMap::new();
    for i in 0..table.rows.len() {
        let key = (
            table.number(i, sv)?.to_bits(),
            table.number(i, le)?.to_bits(),
        );
        if map.insert(key, table.number(i, vc)?).is_some() {
            return Err(CliError::Usage(format!("{what} table repeats a (sweep_value, lp_energy) pair")));
        }
    }
    Ok(map)
}

/// Join two tables on (sweep_value, lp_energy) and compute relative
/// deviations (sim − theory)/theory.
pub fn compare_tables(theory: &Table, sim: &Table, opts: &CompareOptions) -> CliResult<Vec<ComparisonRow>> {
    let ta = theory.meta.get("sweep_axis");
    let sa = sim.meta.get("sweep_axis");
    if ta != sa {
        return Err(CliError::Usage(format!(
            "sweep axis mismatch: theory {:?}, simulation {:?}",
            ta, sa
        )));
    }
    let t = keyed(theory, &opts.theory_column, "theory")?;
    let s = keyed(sim, &opts.sim_column, "simulation")?;
    let mut rows = Vec::new();
    for ((vb, eb), sim_v) in &s {
        let Some(th) = t.get(&(*vb, *eb)) else {
            continue;
        };
        let sweep_value = f64::from_bits(*vb);
        let rel = (sim_v - th) / th;
        let checked = opts.check_up_to.is_none_or(|m| sweep_value <= m * (1.0 + 1e-12));
        rows.push(ComparisonRow {
            sweep_value,
            lp_energy: f64::from_bits(*eb),
            theory: *th,
            sim: *sim_v,
            rel_deviation: rel,
            checked,
            pass: rel.abs() <= opts.tolerance,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Usage(
            "no (sweep_value, lp_energy) pairs in common; do the tables share an axis?".into(),
        ));
    }
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(a.lp_energy.total_cmp(&b.lp_energy))
    });
    Ok(rows)
}

/// `compare`: writes `compare.csv` and fails with the tolerance error when a
/// checked point deviates too much.
pub fn cmd_compare(theory: &Path, sim: &Path, dir: &Path, opts: &CompareOptions) -> CliResult<(PathBuf, Vec<ComparisonRow>)> {
    if !(opts.tolerance.is_finite() && opts.tolerance >= 0.0) {
        return Err(CliError::Usage(format!("tolerance must be >= 0, got {}", opts.tolerance)));
    }
    let t = read_table(theory)?;
    let s = read_table(sim)?;
    let rows = compare_tables(&t, &s, opts)?;
    ensure_dir(dir)?;
    let mut prov = Provenance::bare("compare");
    prov.push("sweep_axis", t.meta.get("sweep_axis").cloned().unwrap_or_default());
    prov.push("theory_config_sha256", t.meta.get("config_sha256").cloned().unwrap_or_default());
    prov.push("sim_config_sha256", s.meta.get("config_sha256").cloned().unwrap_or_default());
    prov.push("tolerance", fmt_num(opts.tolerance));
    let path = dir.join("compare.csv");
    write_table(
        &path,
        &prov,
        &COMPARE_COLUMNS,
        rows.iter().map(|r| {
            let status = match (r.checked, r.pass) {
                (false, _) => "unchecked",
                (true, true) => "pass",
                (true, false) => "fail",
            };
            vec![
                fmt_num(r.sweep_value),
                fmt_num(r.lp_energy),
                fmt_num(r.theory),
                fmt_num(r.sim),
                fmt_num(r.rel_deviation),
                status.to_string(),
            ]
        }),
    )?;
    let checked = rows.iter().filter(|r| r.checked).count();
    let failed = rows.iter().filter(|r| r.checked && !r.pass).count();
    if failed > 0 {
        return Err(CliError::Tolerance {
            failed,
            checked,
            tolerance: opts.tolerance,
        });
    }
    Ok((path, rows))
}
