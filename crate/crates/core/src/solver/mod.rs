//! Split-step spectral solution of the paraxial probe equation
//!
//!   ∂g/∂z = (i/2k)∇⊥²g + 2iπk⟨χ⟩(|G|², |g|²)·g
//!
//! with periodic transverse boundaries. Diffraction is applied exactly in
//! Fourier space. The medium sub-step integrates the pointwise equation
//! d(ln g)/dz = 2iπk⟨χ⟩ with the control evaluated at the sub-step midpoint.

mod fft;
mod field;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

pub use field::ComplexField2D;

use crate::analysis::{DiagnosticRecord, RunDiagnostics};
use crate::beams::{control_intensity, ControlBeamSpec};
use crate::error::{Error, Result};
use crate::params::GridSpec;
use crate::susceptibility::{build_chi_table, ChiTable, DopplerModel, FieldPoint, TableOptions};
use fft::{angular_frequencies, Fft2};

/// Environment variable selecting the worker count.
pub const THREADS_ENV: &str = "RAMANPROP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitOrder {
    /// Strang: D(h/2) M(h) D(h/2).
    Second,
    /// Triple-jump composition of three Strang steps.
    Fourth,
}

impl SplitOrder {
    pub fn from_order(order: u32) -> Option<Self> {
        match order {
            2 => Some(SplitOrder::Second),
            4 => Some(SplitOrder::Fourth),
            _ => None,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            SplitOrder::Second => 2,
            SplitOrder::Fourth => 4,
        }
    }
}

/// How the intensity dependence of ⟨χ⟩ is handled inside a medium sub-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntensityCoupling {
    /// |g|² held at its value entering the sub-step.
    Frozen,
    /// One RK4 step of the log-amplitude equation.
    Integrated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChiEvaluation {
    Table(TableOptions),
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    pub coupling: IntensityCoupling,
    pub chi: ChiEvaluation,
    /// Raised-cosine absorber over the outer 10% of each half-width.
    pub absorbing_edge: bool,
    /// Record diagnostics every this many steps (0: only at entry and exit).
    pub snapshot_every: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            coupling: IntensityCoupling::Integrated,
            chi: ChiEvaluation::Table(TableOptions::default()),
            absorbing_edge: false,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Diffract(usize),
    /// Medium over `length`·h with the control at z + `mid`·h.
    Medium {
        mid: f64,
        length: f64,
    },
}

/// Operator sequence and cached diffraction phases for one step length.
pub struct StepPlan {
    pub order: SplitOrder,
    /// Step length actually used, cell_length / n_steps.
    pub dz: f64,
    pub n_steps: usize,
    wavenumber: f64,
    nx: usize,
    ny: usize,
    extent: f64,
    /// (distance, phases in transposed spectral layout)
    phases: Vec<(f64, Vec<Complex64>)>,
    ops: Vec<Op>,
    fft: Fft2,
}

fn diffraction_phases(nx: usize, ny: usize, extent: f64, wavenumber: f64, distance: f64) -> Vec<Complex64> {
    let kx = angular_frequencies(nx, extent / nx as f64);
    let ky = angular_frequencies(ny, extent / ny as f64);
    let mut out = Vec::with_capacity(nx * ny);
    for &kyj in &ky {
        for &kxi in &kx {
            let arg = -(kxi * kxi + kyj * kyj) * distance / (2.0 * wavenumber);
            out.push(Complex64::from_polar(1.0, arg));
        }
    }
    out
}

impl StepPlan {
    pub fn new(order: SplitOrder, grid: &GridSpec, wavenumber: f64) -> Self {
        let n_steps = grid.n_steps().max(1);
        let dz = grid.cell_length / n_steps as f64;
        let (distances, ops): (Vec<f64>, Vec<Op>) = match order {
            SplitOrder::Second => (
                vec![0.5],
                vec![Op::Diffract(0), Op::Medium { mid: 0.5, length: 1.0 }, Op::Diffract(0)],
            ),
            SplitOrder::Fourth => {
                let c = 2f64.cbrt();
                let w1 = 1.0 / (2.0 - c);
                let w0 = -c / (2.0 - c);
                (
                    vec![0.5 * w1, 0.5 * (w0 + w1)],
                    vec![
                        Op::Diffract(0),
                        Op::Medium {
                            mid: 0.5 * w1,
                            length: w1,
                        },
                        Op::Diffract(1),
                        Op::Medium { mid: 0.5, length: w0 },
                        Op::Diffract(1),
                        Op::Medium {
                            mid: 1.0 - 0.5 * w1,
                            length: w1,
                        },
                        Op::Diffract(0),
                    ],
                )
            }
        };
        let phases = distances
            .into_iter()
            .map(|f| {
                let d = f * dz;
                (d, diffraction_phases(grid.nx, grid.ny, grid.extent, wavenumber, d))
            })
            .collect();
        Self {
            order,
            dz,
            n_steps,
            wavenumber,
            nx: grid.nx,
            ny: grid.ny,
            extent: grid.extent,
            phases,
            ops,
            fft: Fft2::new(grid.nx, grid.ny),
        }
    }

    /// Cached (distance, phase factors) pairs.
    pub fn phase_cache(&self) -> impl Iterator<Item = (f64, &[Complex64])> {
        self.phases.iter().map(|(d, p)| (*d, p.as_slice()))
    }

    fn check_field(&self, field: &ComplexField2D) {
        assert!(
            field.nx == self.nx && field.ny == self.ny && field.extent == self.extent,
            "field grid does not match the step plan"
        );
    }

    fn apply_phases(&self, field: &mut ComplexField2D, phases: &[Complex64], scratch: &mut [Complex64]) {
        self.fft.forward(&mut field.values, scratch);
        scratch.par_iter_mut().zip(phases.par_iter()).for_each(|(v, p)| *v *= p);
        self.fft.inverse(scratch, &mut field.values);
    }
}

/// Exact paraxial free-space propagation over `distance` (may be negative).
pub fn diffraction_step(field: &ComplexField2D, distance: f64, wavenumber: f64) -> ComplexField2D {
    let mut out = field.clone();
    if distance == 0.0 {
        return out;
    }
    let fft = Fft2::new(field.nx, field.ny);
    let phases = diffraction_phases(field.nx, field.ny, field.extent, wavenumber, distance);
    let mut scratch = vec![Complex64::new(0.0, 0.0); field.values.len()];
    fft.forward(&mut out.values, &mut scratch);
    scratch.iter_mut().zip(&phases).for_each(|(v, p)| *v *= p);
    fft.inverse(&mut scratch, &mut out.values);
    out.z = field.z + distance;
    out
}

/// Pointwise g → g·exp(2iπk⟨χ⟩·distance).
pub fn medium_step(field: &ComplexField2D, chi: &[Complex64], distance: f64, wavenumber: f64) -> ComplexField2D {
    assert_eq!(chi.len(), field.values.len(), "chi field size mismatch");
    let c = Complex64::new(0.0, 2.0 * PI * wavenumber * distance);
    let mut out = field.clone();
    out.values
        .par_iter_mut()
        .zip(chi.par_iter())
        .for_each(|(g, &x)| *g *= (c * x).exp());
    out.z = field.z + distance;
    out
}

/// Where ⟨χ⟩ comes from during a run.
enum ChiSource {
    /// No control anywhere: ⟨χ⟩ ≡ 0.
    Zero,
    Table(ChiTable),
    Direct,
}

struct Susceptibility<'a> {
    model: &'a DopplerModel,
    source: ChiSource,
    control_max: f64,
    table_options: TableOptions,
    rebuilt: bool,
}

/// Lower table edges relative to the maxima; below them |G|² scales linearly
/// and |g|² is clamped.
const TABLE_DYNAMIC_RANGE: f64 = 1e-10;
const PROBE_HEADROOM: f64 = 1.5;
/// A focusing probe can grow several-fold; one rebuild must cover it.
const REBUILD_HEADROOM: f64 = 8.0;

impl<'a> Susceptibility<'a> {
    fn new(
        model: &'a DopplerModel,
        control: &ControlBeamSpec,
        grid: &GridSpec,
        probe_max: f64,
        chi: ChiEvaluation,
    ) -> Result<Self> {
        let control_max = control.peak_intensity_between(0.0, grid.cell_length);
        let mut s = Self {
            model,
            source: ChiSource::Zero,
            control_max,
            table_options: TableOptions::default(),
            rebuilt: false,
        };
        if control_max > 0.0 {
            s.source = match chi {
                ChiEvaluation::Direct => ChiSource::Direct,
                ChiEvaluation::Table(opts) => {
                    s.table_options = opts;
                    ChiSource::Table(s.build(probe_max * PROBE_HEADROOM)?)
                }
            };
        }
        Ok(s)
    }

    fn build(&self, probe_top: f64) -> Result<ChiTable> {
        let probe_top = if probe_top > 0.0 { probe_top } else { 1e-6 };
        let control_top = self.control_max * (1.0 + 1e-9);
        build_chi_table(
            (control_top * TABLE_DYNAMIC_RANGE, control_top),
            (probe_top * TABLE_DYNAMIC_RANGE, probe_top),
            self.model,
            &self.table_options,
        )
    }

    /// Rebuilds the table once if the probe has outgrown it.
    fn ensure_range(&mut self, probe_max: f64, z: f64) -> Result<()> {
        let ChiSource::Table(table) = &self.source else {
            return Ok(());
        };
        let top = table.probe_range().1;
        if probe_max * 1.1 <= top {
            return Ok(());
        }
        if self.rebuilt {
            return Err(Error::TableRange(format!(
                "probe intensity {probe_max:e} at z = {z} cm exceeds the rebuilt table (max {top:e})"
            )));
        }
        log::info!("probe intensity {probe_max:.3e} outgrew the chi table at z = {z:.4} cm; rebuilding");
        self.source = ChiSource::Table(self.build(REBUILD_HEADROOM * probe_max)?);
        self.rebuilt = true;
        Ok(())
    }

    fn is_zero(&self) -> bool {
        matches!(self.source, ChiSource::Zero)
    }

    fn chi(&self, point: FieldPoint) -> Result<Complex64> {
        match &self.source {
            ChiSource::Zero => Ok(Complex64::new(0.0, 0.0)),
            ChiSource::Table(t) => t.lookup(point),
            ChiSource::Direct => self.model.chi(point),
        }
    }

    fn table_shape(&self) -> Option<(usize, usize)> {
        match &self.source {
            ChiSource::Table(t) => Some(t.shape()),
            _ => None,
        }
    }
}

/// Medium sub-step with the control sampled at `z_mid`.
fn medium_substep(
    field: &mut ComplexField2D,
    chi: &Susceptibility,
    control: &ControlBeamSpec,
    z_mid: f64,
    length: f64,
    wavenumber: f64,
    coupling: IntensityCoupling,
) -> Result<()> {
    if chi.is_zero() || length == 0.0 {
        return Ok(());
    }
    let ny = field.ny;
    let xs: Vec<f64> = (0..field.nx).map(|i| field.x(i)).collect();
    let ys: Vec<f64> = (0..ny).map(|j| field.y(j)).collect();
    let c = Complex64::new(0.0, 2.0 * PI * wavenumber);
    field
        .values
        .par_chunks_mut(ny)
        .enumerate()
        .try_for_each(|(i, row)| -> Result<()> {
            for (j, g) in row.iter_mut().enumerate() {
                let cg2 = control_intensity(control, xs[i], ys[j], z_mid);
                if cg2 == 0.0 {
                    continue;
                }
                let i0 = g.norm_sqr();
                let rate = |p: f64| -> Result<Complex64> { Ok(c * chi.chi(FieldPoint::new(p, cg2))?) };
                let exponent = match coupling {
                    IntensityCoupling::Frozen => rate(i0)? * length,
                    IntensityCoupling::Integrated => {
                        let k1 = rate(i0)?;
                        let k2 = rate(i0 * (k1.re * length).exp())?;
                        let k3 = rate(i0 * (k2.re * length).exp())?;
                        let k4 = rate(i0 * (2.0 * k3.re * length).exp())?;
                        (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (length / 6.0)
                    }
                };
                *g *= exponent.exp();
            }
            Ok(())
        })
}

fn edge_mask(n: usize, extent: f64) -> Vec<f64> {
    let d = extent / n as f64;
    let half = extent / 2.0;
    let inner = 0.9 * half;
    (0..n)
        .map(|i| {
            let x = ((i as f64 - (n / 2) as f64) * d).abs();
            if x <= inner {
                1.0
            } else {
                let t = ((x - inner) / (half - inner)).min(1.0);
                0.5 * (1.0 + (PI * t).cos())
            }
        })
        .collect()
}

/// Result of a full cell transit.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub output: ComplexField2D,
    pub diagnostics: RunDiagnostics,
    /// Size of the χ table in use at the end, if any.
    pub table_shape: Option<(usize, usize)>,
}

/// Propagates `probe` from z = 0 to the cell exit. `on_snapshot` receives the
/// step index and field whenever diagnostics are recorded.
pub fn propagate(
    probe: ComplexField2D,
    control: &ControlBeamSpec,
    model: &DopplerModel,
    grid: &GridSpec,
    plan: &StepPlan,
    options: &PropagateOptions,
    on_snapshot: &mut dyn FnMut(usize, &ComplexField2D) -> Result<()>,
) -> Result<Propagation> {
    plan.check_field(&probe);
    let mut field = probe;
    field.z = 0.0;
    let mut chi = Susceptibility::new(model, control, grid, field.max_intensity(), options.chi)?;
    let mask = options
        .absorbing_edge
        .then(|| (edge_mask(field.nx, field.extent), edge_mask(field.ny, field.extent)));
    let mut scratch = vec![Complex64::new(0.0, 0.0); field.values.len()];
    let mut diagnostics = RunDiagnostics::new(field.power());

    let record = |step: usize,
                  field: &ComplexField2D,
                  diag: &mut RunDiagnostics,
                  cb: &mut dyn FnMut(usize, &ComplexField2D) -> Result<()>|
     -> Result<()> {
        diag.push(DiagnosticRecord::measure(field)?);
        cb(step, field)
    };
    record(0, &field, &mut diagnostics, on_snapshot)?;

    let h = plan.dz;
    for step in 0..plan.n_steps {
        let z0 = step as f64 * h;
        chi.ensure_range(field.max_intensity(), z0)?;
        for op in &plan.ops {
            match *op {
                Op::Diffract(idx) => plan.apply_phases(&mut field, &plan.phases[idx].1, &mut scratch),
                Op::Medium { mid, length } => medium_substep(
                    &mut field,
                    &chi,
                    control,
                    z0 + mid * h,
                    length * h,
                    plan.wavenumber,
                    options.coupling,
                )?,
            }
        }
        if let Some((mx, my)) = &mask {
            field
                .values
                .par_chunks_mut(field.ny)
                .zip(mx.par_iter())
                .for_each(|(row, &a)| row.iter_mut().zip(my).for_each(|(v, &b)| *v *= a * b));
        }
        field.z = (step + 1) as f64 * h;
        if !field.is_finite() {
            return Err(Error::NonFinite { z: field.z });
        }
        let last = step + 1 == plan.n_steps;
        if last || (options.snapshot_every > 0 && (step + 1) % options.snapshot_every == 0) {
            record(step + 1, &field, &mut diagnostics, on_snapshot)?;
        }
    }
    Ok(Propagation {
        output: field,
        diagnostics,
        table_shape: chi.table_shape(),
    })
}

/// Worker count from `RAMANPROP_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a dedicated pool of `threads` workers (or the global pool).
pub fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("failed to start worker pool")
            .install(f),
        None => f(),
    }
}
