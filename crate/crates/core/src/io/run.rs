//! Subcommand pipelines.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{parse_config, Averaging, Config, Resolved};
use super::manifest::{unix_now, RunManifest};
use super::snapshot::{read_snapshot, write_snapshot};
use crate::analysis::{DiagnosticRecord, RunDiagnostics};
use crate::beams::{control_intensity, probe_field};
use crate::error::{ConfigIssue, Error, Result};
use crate::params::prefactor_over_gamma;
use crate::solver::{propagate, with_workers, ChiEvaluation, ComplexField2D, PropagateOptions, SplitOrder, StepPlan};
use crate::susceptibility::{oracle_sweep, DopplerModel, FieldPoint, OracleOptions, TableOptions};

pub const LOCK_FILE: &str = ".ramanprop.lock";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    ChiScan,
    Propagate,
    Analyze,
    Oracle,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::ChiScan => "chi-scan",
            Subcommand::Propagate => "propagate",
            Subcommand::Analyze => "analyze",
            Subcommand::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::ChiScan, Self::Propagate, Self::Analyze, Self::Oracle]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFlags {
    pub seed: Option<u64>,
    pub order: Option<u32>,
    pub direct_chi: bool,
    /// Snapshot directory read by `analyze` (default `<out>/snapshots`).
    pub input: Option<PathBuf>,
    /// Worker count; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Held while a run writes into its output directory.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Applies `flags` to a resolved configuration.
pub fn apply_flags(resolved: &mut Resolved, flags: &RunFlags) -> Result<()> {
    let c = &mut resolved.config;
    if let Some(seed) = flags.seed {
        c.seed = seed;
    }
    if let Some(order) = flags.order {
        c.solver.order = SplitOrder::from_order(order).ok_or_else(|| {
            Error::Config(vec![ConfigIssue {
                line: None,
                message: format!("--order must be 2 or 4, got {order}"),
            }])
        })?;
    }
    if flags.direct_chi {
        c.solver.chi_table = false;
    }
    Ok(())
}

pub fn doppler_model(config: &Config) -> DopplerModel {
    match config.solver.averaging {
        Averaging::Exact => DopplerModel::exact(config.params),
        Averaging::GaussHermite(n) => DopplerModel::gauss_hermite(config.params, n),
    }
}

pub fn propagate_options(config: &Config) -> PropagateOptions {
    let s = &config.solver;
    PropagateOptions {
        coupling: s.coupling,
        chi: if s.chi_table {
            ChiEvaluation::Table(TableOptions {
                tolerance: s.table_tolerance,
                seed: config.seed,
                ..TableOptions::default()
            })
        } else {
            ChiEvaluation::Direct
        },
        absorbing_edge: s.absorbing_edge,
        snapshot_every: s.snapshot_every,
    }
}

/// Parses `config_path`, applies `flags` and runs `sub` into `out`.
pub fn run_subcommand(sub: Subcommand, config_path: &Path, out: &Path, flags: &RunFlags) -> Result<RunManifest> {
    let mut resolved = parse_config(config_path)?;
    apply_flags(&mut resolved, flags)?;
    run_resolved(sub, &resolved, out, flags)
}

/// Runs `sub` with an already resolved configuration. On success the manifest
/// has been written to `out`.
pub fn run_resolved(sub: Subcommand, resolved: &Resolved, out: &Path, flags: &RunFlags) -> Result<RunManifest> {
    let _lock = OutputLock::acquire(out)?;
    let config = &resolved.config;
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: sub.name().to_string(),
        seed: config.seed,
        started_unix: unix_now(),
        finished_unix: 0,
        defaulted: resolved.defaulted.clone(),
        config: config.to_table(),
        outputs: Vec::new(),
    };
    log::info!("{} into {}", sub.name(), out.display());
    let outcome = with_workers(flags.threads, || match sub {
        Subcommand::ChiScan => chi_scan(config, out),
        Subcommand::Propagate => run_propagation(config, out),
        Subcommand::Analyze => analyze(out, flags.input.as_deref()),
        Subcommand::Oracle => oracle(config, out),
    });
    let (files, failure) = match outcome {
        Ok(files) => (files, None),
        Err(Failure { files, error }) => (files, Some(error)),
    };
    for f in &files {
        manifest.add_output(out, f)?;
    }
    manifest.finished_unix = unix_now();
    manifest.write(out)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

/// An error raised after some outputs were already written.
struct Failure {
    files: Vec<String>,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Self {
            files: Vec::new(),
            error,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(error: std::io::Error) -> Self {
        Error::from(error).into()
    }
}

type Outcome = std::result::Result<Vec<String>, Failure>;

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Plain decimal near unit scale, exponent notation otherwise; always round-trips.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            a * (1.0 - t) + b * t
        })
        .collect()
}

pub const CHI_SCAN_FILE: &str = "chi_scan.csv";

fn chi_scan(config: &Config, out: &Path) -> Outcome {
    let control = config.require_control("chi-scan")?;
    let scan = &config.scan;
    let level = scan.probe_level.ok_or_else(|| {
        Error::Config(vec![ConfigIssue {
            line: None,
            message: "`chi-scan` needs [scan] probe_level_over_gamma or a [probe] section".into(),
        }])
    })?;
    let radii = linspace(scan.r_min, scan.r_max, scan.r_points);
    let detunings = linspace(scan.delta_r_min, scan.delta_r_max, scan.delta_r_points);
    let rows: Vec<Vec<(f64, f64, num_complex::Complex64)>> = detunings
        .par_iter()
        .map(|&dr| {
            let mut params = config.params;
            params.delta_r = dr;
            let model = DopplerModel {
                params,
                ..doppler_model(config)
            };
            radii
                .iter()
                .map(|&r| {
                    let point = FieldPoint::new(level * level, control_intensity(&control, r, 0.0, scan.z));
                    Ok((r, dr, model.chi(point)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut w = csv_writer(&out.join(CHI_SCAN_FILE))?;
    w.write_record(["r_cm", "delta_R_over_gamma", "re_chi", "im_chi"])
        .map_err(csv_error)?;
    for (r, dr, chi) in rows.into_iter().flatten() {
        w.write_record([r, dr, chi.re, chi.im].map(format_number))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(vec![CHI_SCAN_FILE.to_string()])
}

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

fn write_diagnostics(path: &Path, records: &[DiagnosticRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["z_cm", "width_cm", "total_power", "peak_positions"])
        .map_err(csv_error)?;
    for r in records {
        let peaks: Vec<String> = r.peak_positions.iter().copied().map(format_number).collect();
        w.write_record([
            format_number(r.z),
            format_number(r.width),
            format_number(r.total_power),
            peaks.join(";"),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn snapshot_name(step: usize) -> String {
    format!("snap_{step:06}.rbpf")
}

fn run_propagation(config: &Config, out: &Path) -> Outcome {
    let grid = config.require_grid("propagate")?;
    let control = config.require_control("propagate")?;
    let probe_spec = config.require_probe("propagate")?;
    let probe = probe_field(&probe_spec, &grid)?;
    let model = doppler_model(config);
    let plan = StepPlan::new(config.solver.order, &grid, config.params.wavenumber());
    let options = propagate_options(config);
    let snap_dir = out.join(SNAPSHOT_DIR);
    fs::create_dir_all(&snap_dir)?;
    log::info!(
        "{}x{} grid, {} steps of {:.4e} cm, order {}",
        grid.nx,
        grid.ny,
        plan.n_steps,
        plan.dz,
        plan.order.order()
    );
    let mut files = Vec::new();
    let mut on_snapshot = |step: usize, field: &ComplexField2D| -> Result<()> {
        let name = snapshot_name(step);
        write_snapshot(&snap_dir.join(&name), field)?;
        log::debug!("snapshot {name} at z = {:.4} cm", field.z);
        files.push(format!("{SNAPSHOT_DIR}/{name}"));
        Ok(())
    };
    let result = propagate(probe, &control, &model, &grid, &plan, &options, &mut on_snapshot);
    match result {
        Ok(run) => {
            if let Some(shape) = run.table_shape {
                log::info!("susceptibility table {}x{}", shape.0, shape.1);
            }
            write_diagnostics(&out.join(DIAGNOSTICS_FILE), &run.diagnostics.records)?;
            files.push(DIAGNOSTICS_FILE.to_string());
            Ok(files)
        }
        Err(error) => Err(Failure { files, error }),
    }
}

pub const ANALYSIS_FILE: &str = "analysis.csv";
pub const INPUT_PROFILE_FILE: &str = "profile_input.csv";
pub const OUTPUT_PROFILE_FILE: &str = "profile_output.csv";

/// Intensity on the full grid, one blank line between x blocks.
fn write_profile(path: &Path, field: &ComplexField2D) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x_cm,y_cm,intensity")?;
    for i in 0..field.nx {
        for j in 0..field.ny {
            writeln!(
                w,
                "{},{},{}",
                format_number(field.x(i)),
                format_number(field.y(j)),
                format_number(field.at(i, j).norm_sqr())
            )?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Snapshot files in `dir`, sorted by name.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "rbpf"))
        .collect();
    paths.sort();
    Ok(paths)
}

fn analyze(out: &Path, input: Option<&Path>) -> Outcome {
    let dir = input.map(Path::to_path_buf).unwrap_or_else(|| out.join(SNAPSHOT_DIR));
    let paths = list_snapshots(&dir)?;
    if paths.is_empty() {
        return Err(Error::Snapshot {
            path: dir,
            reason: "no .rbpf files".into(),
        }
        .into());
    }
    let mut records: Vec<DiagnosticRecord> = paths
        .par_iter()
        .map(|p| DiagnosticRecord::measure(&read_snapshot(p)?))
        .collect::<Result<_>>()?;
    records.sort_by(|a, b| a.z.total_cmp(&b.z));
    let mut diagnostics = RunDiagnostics::new(records[0].total_power);
    for r in records {
        diagnostics.push(r);
    }
    write_diagnostics(&out.join(ANALYSIS_FILE), &diagnostics.records)?;
    let first = read_snapshot(&paths[0])?;
    let last = read_snapshot(paths.last().unwrap())?;
    let (first, last) = if first.z <= last.z {
        (first, last)
    } else {
        (last, first)
    };
    write_profile(&out.join(INPUT_PROFILE_FILE), &first)?;
    write_profile(&out.join(OUTPUT_PROFILE_FILE), &last)?;
    Ok(vec![
        ANALYSIS_FILE.to_string(),
        INPUT_PROFILE_FILE.to_string(),
        OUTPUT_PROFILE_FILE.to_string(),
    ])
}

pub const ORACLE_FILE: &str = "oracle.csv";

fn oracle(config: &Config, out: &Path) -> Outcome {
    let o = &config.oracle;
    let opts = OracleOptions {
        max_steps: o.max_steps,
        ..OracleOptions::default()
    };
    let prefactor = prefactor_over_gamma(&config.params);
    let sweep = oracle_sweep(config.seed, o.draws, prefactor, &opts)?;
    let mut w = csv_writer(&out.join(ORACLE_FILE))?;
    w.write_record([
        "probe_over_gamma",
        "control_over_gamma",
        "delta_p_over_gamma",
        "delta_R_over_gamma",
        "big_gamma_over_gamma",
        "re_chi",
        "im_chi",
        "re_chi_oracle",
        "im_chi_oracle",
        "relative_error",
    ])
    .map_err(csv_error)?;
    for c in &sweep {
        w.write_record(
            [
                c.point.probe_abs2.sqrt(),
                c.point.control_abs2.sqrt(),
                c.line.delta_p,
                c.line.delta_r(),
                c.line.big_gamma,
                c.closed_form.re,
                c.closed_form.im,
                c.oracle.re,
                c.oracle.im,
                c.relative_error,
            ]
            .map(format_number),
        )
        .map_err(csv_error)?;
    }
    w.flush()?;
    let files = vec![ORACLE_FILE.to_string()];
    let max_error = sweep.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    log::info!("oracle: {} draws, max relative error {max_error:.3e}", sweep.len());
    if max_error < o.tolerance {
        Ok(files)
    } else {
        Err(Failure {
            files,
            error: Error::OracleMismatch {
                max_error,
                tolerance: o.tolerance,
            },
        })
    }
}
