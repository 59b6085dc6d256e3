//! Tabulated ⟨χ⟩(|G|², |g|²) for fixed detunings.
//!
//! Samples are log-spaced in both intensities. The table stores χ and
//! interpolates χ/|G|² in (ln|G|², ln|g|²) with 4-point Lagrange cubics along
//! each axis. χ/|G|² is flat in the weak-control limit where χ ∝ |G|².
//! Bilinear interpolation would need more than 2048² samples for 1e-4 over a
//! 1e10 dynamic range, because χ/|G|² bends sharply along |g|² at weak control.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DopplerModel, FieldPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOptions {
    pub initial_size: usize,
    pub max_size: usize,
    /// Required max relative interpolation error on the probe set.
    pub tolerance: f64,
    pub probe_count: usize,
    pub seed: u64,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            initial_size: 64,
            max_size: 2048,
            tolerance: 1e-4,
            probe_count: 1000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LogAxis {
    start: f64,
    step: f64,
    len: usize,
    min: f64,
    max: f64,
}

impl LogAxis {
    fn new(min: f64, max: f64, len: usize) -> Self {
        let (a, b) = (min.ln(), max.ln());
        Self {
            start: a,
            step: (b - a) / (len - 1) as f64,
            len,
            min,
            max,
        }
    }

    fn value(&self, i: usize) -> f64 {
        if i == 0 {
            self.min
        } else if i + 1 == self.len {
            self.max
        } else {
            (self.start + self.step * i as f64).exp()
        }
    }

    /// First index of the 4-point stencil and its Lagrange weights; exact
    /// sample hits give a single unit weight.
    fn stencil(&self, x: f64) -> (usize, [f64; 4]) {
        let f = ((x.ln() - self.start) / self.step).clamp(0.0, (self.len - 1) as f64);
        let nearest = f.round();
        let f = if (f - nearest).abs() < 1e-9 { nearest } else { f };
        let cell = (f.floor() as usize).min(self.len - 2);
        let first = cell.saturating_sub(1).min(self.len - 4);
        // offset of x from stencil node 1
        let t = f - (first + 1) as f64;
        if t == 0.0 {
            return (first, [0.0, 1.0, 0.0, 0.0]);
        }
        if t == -1.0 {
            return (first, [1.0, 0.0, 0.0, 0.0]);
        }
        if t == 1.0 {
            return (first, [0.0, 0.0, 1.0, 0.0]);
        }
        if t == 2.0 {
            return (first, [0.0, 0.0, 0.0, 1.0]);
        }
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        (first, w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiTable {
    control: LogAxis,
    probe: LogAxis,
    control_samples: Vec<f64>,
    probe_samples: Vec<f64>,
    /// values[i * n_probe + j] = χ(G²ᵢ, g²ⱼ)
    values: Vec<Complex64>,
    achieved_error: f64,
}

impl ChiTable {
    pub fn control_range(&self) -> (f64, f64) {
        (self.control_samples[0], *self.control_samples.last().unwrap())
    }

    pub fn probe_range(&self) -> (f64, f64) {
        (self.probe_samples[0], *self.probe_samples.last().unwrap())
    }

    /// (control samples, probe samples)
    pub fn shape(&self) -> (usize, usize) {
        (self.control.len, self.probe.len)
    }

    /// Max relative error measured on the verification probes.
    pub fn achieved_error(&self) -> f64 {
        self.achieved_error
    }

    pub fn sample(&self, i: usize, j: usize) -> (FieldPoint, Complex64) {
        (
            FieldPoint::new(self.probe_samples[j], self.control_samples[i]),
            self.values[i * self.probe.len + j],
        )
    }

    /// Interpolated ⟨χ⟩. |G|² below the table scales linearly, |g|² below the table is clamped.
    pub fn lookup(&self, point: FieldPoint) -> Result<Complex64> {
        let cg2 = point.control_abs2;
        let g2 = point.probe_abs2;
        if cg2 == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let (cmin, cmax) = self.control_range();
        let (pmin, pmax) = self.probe_range();
        if cg2 > cmax * (1.0 + 1e-12) || g2 > pmax * (1.0 + 1e-12) || !cg2.is_finite() || !g2.is_finite() {
            return Err(Error::TableRange(format!(
                "|G|^2 = {cg2:e} (max {cmax:e}), |g|^2 = {g2:e} (max {pmax:e})"
            )));
        }
        let (i0, wc) = self.control.stencil(cg2.max(cmin));
        let (j0, wp) = self.probe.stencil(g2.max(pmin));
        let np = self.probe.len;
        let mut out = Complex64::new(0.0, 0.0);
        for (a, &u) in wc.iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            let i = i0 + a;
            let row = &self.values[i * np..];
            let mut acc = Complex64::new(0.0, 0.0);
            for (b, &v) in wp.iter().enumerate() {
                if v != 0.0 {
                    acc += v * row[j0 + b];
                }
            }
            // χ/G² interpolated, times G²
            out += u * acc * (cg2 / self.control_samples[i]);
        }
        Ok(out)
    }
}

fn fill(model: &DopplerModel, control: LogAxis, probe: LogAxis) -> Result<(Vec<f64>, Vec<f64>, Vec<Complex64>)> {
    let cs: Vec<f64> = (0..control.len).map(|i| control.value(i)).collect();
    let ps: Vec<f64> = (0..probe.len).map(|j| probe.value(j)).collect();
    let values = (0..control.len * probe.len)
        .into_par_iter()
        .map(|k| model.chi(FieldPoint::new(ps[k % probe.len], cs[k / probe.len])))
        .collect::<Result<Vec<_>>>()?;
    Ok((cs, ps, values))
}

/// Builds a table over [control_range] × [probe_range] (both |·|², both minima > 0),
/// doubling the resolution until `opts.tolerance` holds on seeded random probes.
pub fn build_chi_table(
    control_range: (f64, f64),
    probe_range: (f64, f64),
    model: &DopplerModel,
    opts: &TableOptions,
) -> Result<ChiTable> {
    let (cmin, cmax) = control_range;
    let (pmin, pmax) = probe_range;
    if !(cmin > 0.0 && cmax > cmin && pmin > 0.0 && pmax > pmin) {
        return Err(Error::TableRange(format!(
            "bad table ranges: |G|^2 in [{cmin:e}, {cmax:e}], |g|^2 in [{pmin:e}, {pmax:e}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probes: Vec<FieldPoint> = (0..opts.probe_count)
        .map(|_| {
            let c = rng.random_range(cmin.ln()..cmax.ln()).exp();
            let p = rng.random_range(pmin.ln()..pmax.ln()).exp();
            FieldPoint::new(p, c)
        })
        .collect();
    let direct = probes.par_iter().map(|&pt| model.chi(pt)).collect::<Result<Vec<_>>>()?;

    let mut n = opts.initial_size.max(2);
    let mut achieved = f64::INFINITY;
    while n <= opts.max_size {
        let control = LogAxis::new(cmin, cmax, n);
        let probe = LogAxis::new(pmin, pmax, n);
        let (control_samples, probe_samples, values) = fill(model, control, probe)?;
        let mut table = ChiTable {
            control,
            probe,
            control_samples,
            probe_samples,
            values,
            achieved_error: f64::NAN,
        };
        achieved = probes
            .iter()
            .zip(&direct)
            .map(|(&pt, &exact)| {
                let approx = table.lookup(pt).expect("probe inside table range");
                let scale = exact.norm();
                if scale == 0.0 {
                    approx.norm()
                } else {
                    (approx - exact).norm() / scale
                }
            })
            .fold(0.0, f64::max);
        log::debug!("chi table {n}x{n}: max relative error {achieved:.3e}");
        if achieved < opts.tolerance {
            table.achieved_error = achieved;
            return Ok(table);
        }
        n *= 2;
    }
    Err(Error::TableRefinement {
        tolerance: opts.tolerance,
        achieved,
    })
}
