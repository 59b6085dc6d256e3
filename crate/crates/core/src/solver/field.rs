use num_complex::Complex64;

use crate::params::GridSpec;

/// Complex envelope on a uniform square transverse grid at one z.
///
/// Row-major: `values[i * ny + j]` is the sample at x = xᵢ, y = yⱼ with
/// xᵢ = (i − nx/2)·dx, so x = 0 falls on a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    pub nx: usize,
    pub ny: usize,
    /// Full transverse width, cm.
    pub extent: f64,
    /// Longitudinal position, cm.
    pub z: f64,
    pub values: Vec<Complex64>,
}

impl ComplexField2D {
    pub fn zeros(nx: usize, ny: usize, extent: f64) -> Self {
        Self {
            nx,
            ny,
            extent,
            z: 0.0,
            values: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn on_grid(grid: &GridSpec) -> Self {
        Self::zeros(grid.nx, grid.ny, grid.extent)
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: &GridSpec, f: F) -> Self {
        let mut field = Self::on_grid(grid);
        for i in 0..field.nx {
            let x = field.x(i);
            for j in 0..field.ny {
                field.values[i * field.ny + j] = f(x, field.y(j));
            }
        }
        field
    }

    pub fn dx(&self) -> f64 {
        self.extent / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.extent / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx / 2) as f64) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.ny / 2) as f64) * self.dy()
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.ny + j]
    }

    /// Σ|g|²·dx·dy, summed in storage order.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx() * self.dy()
    }

    pub fn max_intensity(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.extent == other.extent
    }

    /// ‖a − b‖₂ / ‖b‖₂ over the samples.
    pub fn relative_l2_distance(&self, reference: &Self) -> f64 {
        assert!(self.same_grid(reference), "fields live on different grids");
        let num: f64 = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = reference.values.iter().map(|b| b.norm_sqr()).sum();
        (num / den).sqrt()
    }
}
