//! 2D transforms built from parallel row FFTs and transposes. Each row is
//! transformed independently, so results do not depend on the worker count.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    fn rows(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], len: usize) {
        data.par_chunks_mut(len).for_each(|row| fft.process(row));
    }

    /// `src` is rows × cols; `dst` becomes cols × rows.
    fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
        dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
            for (r, v) in out.iter_mut().enumerate() {
                *v = src[r * cols + c];
            }
        });
    }

    /// Forward transform of `data` (nx × ny, row-major). The spectrum is left in
    /// `scratch` in transposed layout: `scratch[j * nx + i]` ↔ (k_xᵢ, k_yⱼ).
    pub(crate) fn forward(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        Self::rows(&self.fwd_y, data, self.ny);
        Self::transpose(data, scratch, self.nx, self.ny);
        Self::rows(&self.fwd_x, scratch, self.nx);
    }

    /// Inverse of `forward`, normalised; result written back into `data`.
    pub(crate) fn inverse(&self, scratch: &mut [Complex64], data: &mut [Complex64]) {
        Self::rows(&self.inv_x, scratch, self.nx);
        Self::transpose(scratch, data, self.ny, self.nx);
        Self::rows(&self.inv_y, data, self.ny);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}

/// Angular spatial frequencies 2π·fftfreq(n, d).
pub(crate) fn angular_frequencies(n: usize, d: f64) -> Vec<f64> {
    let step = 2.0 * std::f64::consts::PI / (n as f64 * d);
    (0..n)
        .map(|m| {
            let m = if m < n.div_ceil(2) {
                m as f64
            } else {
                m as f64 - n as f64
            };
            m * step
        })
        .collect()
}
